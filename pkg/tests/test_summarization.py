"""
Tests for abstractive generation and the TextRank extractive baseline
"""

import numpy as np
import pytest

from discograms.models.screenplay import Action, Scene, Screenplay
from discograms.services.embedding_service import ExternalEmbedder, HashingEmbedder
from discograms.services.screenplay_service import scene_to_text
from discograms.services.summarization_service import (
    summarize_abstractive, summarize_extractive, textrank_scores
)
from discograms.utils.exceptions import ConfigMismatch


def scripted(*descriptions):
    scenes = tuple(Scene.build(i, f'INT. ROOM {i}', [Action(text)]) for i, text in enumerate(descriptions))
    return Screenplay('scripted', 'Scripted', scenes)


@pytest.fixture
def axis_embedder():
    vectors = {'alpha': [1.0, 0.0, 0.0], 'omega': [0.0, 1.0, 0.0], 'delta': [0.0, 0.0, 1.0],
               'alpha omega': [1.0, 1.0, 0.0]}
    return ExternalEmbedder({k: np.array(v, dtype=np.float32) for k, v in vectors.items()}, {}, 3)


class TestTextRank:

    def test_identical_pair_beats_orthogonal_scene(self, axis_embedder):
        picked = summarize_extractive(scripted('alpha', 'alpha', 'omega'), axis_embedder, k=1)
        assert [s.scene_index for s in picked] == [0]

    def test_ties_go_to_lower_index(self, axis_embedder):
        picked = summarize_extractive(scripted('omega', 'alpha', 'delta'), axis_embedder, k=2)
        assert [s.scene_index for s in picked] == [0, 1]

    def test_scores_sum_to_one(self, axis_embedder, ensemble_screenplay):
        vectors = HashingEmbedder(64).embed_many([s.description for s in ensemble_screenplay.scenes])
        for matrix in (vectors, axis_embedder.embed_many(['alpha', 'alpha omega', 'omega', 'delta'])):
            scores = textrank_scores(matrix, 0.85, 0.1, 1e-8, 200)
            assert scores.sum() == pytest.approx(1.0, abs=1e-6)
            assert np.all(scores >= 0)

    def test_central_scene_wins(self, axis_embedder):
        scores = textrank_scores(axis_embedder.embed_many(['alpha', 'alpha omega', 'omega']), 0.85, 0.1, 1e-8, 200)
        assert int(np.argmax(scores)) == 1

    def test_budget_covers_everything(self, ensemble_screenplay):
        picked = summarize_extractive(ensemble_screenplay, HashingEmbedder(16), k=10)
        assert [s.scene_index for s in picked] == [0, 1, 2, 3]

    def test_output_keeps_scene_order(self, ensemble_screenplay):
        picked = summarize_extractive(ensemble_screenplay, HashingEmbedder(16), k=2)
        indices = [s.scene_index for s in picked]
        assert indices == sorted(indices) and len(indices) == 2
        assert picked[0].text == scene_to_text(ensemble_screenplay.scenes[indices[0]])

    def test_invalid_budget(self, ensemble_screenplay):
        with pytest.raises(ValueError):
            summarize_extractive(ensemble_screenplay, HashingEmbedder(16), k=0)


class TestAbstractive:

    def test_length_cap_and_determinism(self, make_model, example_screenplay, embedder, testing_config):
        model = make_model()
        first = summarize_abstractive(model, example_screenplay, embedder)
        assert len(first.split()) <= testing_config.max_target_len - 1
        assert summarize_abstractive(model, example_screenplay, embedder) == first

    @pytest.mark.parametrize('variant', ['text_only', 'graph_only'])
    def test_single_modality(self, make_model, example_screenplay, embedder, variant):
        assert isinstance(summarize_abstractive(make_model(variant), example_screenplay, embedder), str)

    def test_from_checkpoint_directory(self, make_model, example_screenplay, embedder, tmp_path):
        model = make_model().eval()
        model.save(tmp_path)
        assert summarize_abstractive(tmp_path, example_screenplay, embedder) == \
            summarize_abstractive(model, example_screenplay, embedder)

    def test_embedder_dimension_checked(self, make_model, example_screenplay):
        with pytest.raises(ConfigMismatch):
            summarize_abstractive(make_model(), example_screenplay, HashingEmbedder(32))
