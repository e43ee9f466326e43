"""
Tests for character embedding extraction, PCA and K-Means
"""

import json

import numpy as np
import pandas as pd
import pytest

from discograms.services.analysis_service import (
    analyze_characters, export_scatter, extract_character_embeddings, kmeans, pca_3d
)
from discograms.services.embedding_service import HashingEmbedder
from discograms.services.graph_service import build_graph, strip_characters
from discograms.utils.exceptions import ConfigMismatch, DegenerateRank, NoCharacters, TooFewPoints


def blobs(seed, per_blob=10):
    rng = np.random.default_rng(seed)
    return np.concatenate([
        rng.normal(0.0, 0.1, size=(per_blob, 3)),
        rng.normal(10.0, 0.1, size=(per_blob, 3)),
    ])


class TestPca:

    @pytest.fixture
    def line(self):
        direction = np.zeros(10)
        direction[[2, 5]] = [0.6, 0.8]
        t = np.array([-2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        return t, direction, t[:, None] * direction + 4.0

    def test_line_has_one_informative_axis(self, line):
        t, direction, points = line
        components, mean, projections, variance, degenerate = pca_3d(points)
        np.testing.assert_allclose(components[0], direction, atol=1e-8)
        np.testing.assert_allclose(projections[:, 0], t - t.mean(), atol=1e-8)
        assert degenerate == [1, 2]
        np.testing.assert_array_equal(projections[:, 1:], 0.0)
        np.testing.assert_array_equal(variance[1:], 0.0)

    def test_line_strict(self, line):
        with pytest.raises(DegenerateRank):
            pca_3d(line[2], strict=True)

    def test_properties(self):
        points = np.random.default_rng(2).normal(size=(20, 6)) * np.array([5.0, 3.0, 2.0, 1.0, 0.5, 0.1])
        components, mean, projections, variance, degenerate = pca_3d(points)
        assert degenerate == []
        np.testing.assert_allclose(components @ components.T, np.eye(3), atol=1e-6)
        np.testing.assert_allclose(projections.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(mean, points.mean(axis=0))
        assert np.all(np.diff(variance) <= 1e-12)
        assert variance.sum() <= np.var(points, axis=0, ddof=1).sum() + 1e-9
        for row in components:
            assert row[np.argmax(np.abs(row))] >= 0

    def test_reconstruction_error_shrinks(self):
        points = np.random.default_rng(4).normal(size=(15, 5))
        components, mean, projections, _, _ = pca_3d(points)
        errors = [
            np.sum((points - mean - projections[:, :m] @ components[:m]) ** 2)
            for m in range(0, 4)
        ]
        assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))

    @pytest.mark.parametrize('shape', [(2, 5), (5, 2)])
    def test_too_few_points(self, shape):
        with pytest.raises(TooFewPoints):
            pca_3d(np.ones(shape))


class TestKmeans:

    @pytest.mark.parametrize('seed', range(5))
    def test_inertia_never_increases(self, seed):
        points = np.random.default_rng(100 + seed).normal(size=(50, 3))
        _, trace, _ = kmeans(points, 4, seed)
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))

    def test_single_cluster_is_the_mean(self):
        points = np.random.default_rng(1).normal(size=(12, 3))
        assignments, trace, centers = kmeans(points, 1)
        assert set(assignments.tolist()) == {0}
        np.testing.assert_allclose(centers[0], points.mean(axis=0))
        assert trace[-1] == pytest.approx(((points - points.mean(axis=0)) ** 2).sum())

    @pytest.mark.parametrize('seed', range(10))
    def test_separated_blobs(self, seed):
        assignments, _, _ = kmeans(blobs(seed), 2, seed)
        assert len(set(assignments[:10].tolist())) == 1
        assert len(set(assignments[10:].tolist())) == 1
        assert assignments[0] != assignments[10]

    def test_deterministic(self):
        points = np.random.default_rng(9).normal(size=(30, 3))
        first = kmeans(points, 3, seed=5)
        second = kmeans(points, 3, seed=5)
        np.testing.assert_array_equal(first[0], second[0])
        assert first[1] == second[1]

    def test_final_inertia_matches_assignment(self):
        points = np.random.default_rng(6).normal(size=(25, 3))
        assignments, trace, centers = kmeans(points, 3)
        assert trace[-1] == pytest.approx(((points - centers[assignments]) ** 2).sum())
        assert len(np.unique(assignments)) == 3

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((4, 3)), 0)
        with pytest.raises(TooFewPoints):
            kmeans(np.zeros((2, 3)), 3)


class TestCharacterEmbeddings:

    def test_extract(self, make_model, example_graph, testing_config):
        embeddings = extract_character_embeddings(make_model(), example_graph)
        assert sorted(embeddings) == [0, 1]
        for vec in embeddings.values():
            assert vec.shape == (testing_config.gat_heads * testing_config.gat_hidden,)
            assert np.all(np.isfinite(vec))

    def test_stripped_graph(self, make_model, example_graph):
        with pytest.raises(NoCharacters):
            extract_character_embeddings(make_model(), strip_characters(example_graph))

    def test_variant_without_characters(self, make_model, example_graph):
        with pytest.raises(NoCharacters):
            extract_character_embeddings(make_model('full_without_characters'), example_graph)

    def test_text_only_has_no_graph_encoder(self, make_model, example_graph):
        with pytest.raises(ConfigMismatch):
            extract_character_embeddings(make_model('text_only'), example_graph)

    def test_dimension_mismatch(self, make_model, example_screenplay):
        graph = build_graph(example_screenplay, HashingEmbedder(32))
        with pytest.raises(ConfigMismatch):
            extract_character_embeddings(make_model(), graph)


class TestAnalyzeCharacters:

    def test_ensemble(self, make_model, ensemble_graph):
        analysis = analyze_characters(make_model(), ensemble_graph, k=2, seed=0)
        assert analysis.names == ['MARGO', 'TEDDY', 'LENA', 'VICTOR']
        assert analysis.projections.shape == (4, 3)
        assert set(analysis.assignments.tolist()) <= {0, 1}
        assert analysis.k == 2
        assert all(b <= a + 1e-9 for a, b in zip(analysis.inertia, analysis.inertia[1:]))

    def test_export_scatter(self, make_model, ensemble_graph, tmp_path):
        analysis = analyze_characters(make_model(), ensemble_graph, k=2)
        out = export_scatter(analysis, tmp_path / 'scatter.json', tmp_path / 'scatter.csv')

        payload = json.loads(out.read_text(encoding='utf-8'))
        assert payload['k'] == 2
        assert len(payload['records']) == 4
        assert len(payload['explained_variance']) == 3
        coords = np.array([[r['x'], r['y'], r['z']] for r in payload['records']])
        np.testing.assert_allclose(coords, analysis.projections)
        assert [r['cluster'] for r in payload['records']] == analysis.assignments.tolist()
        assert all(r['degree'] > 0 for r in payload['records'])

        frame = pd.read_csv(tmp_path / 'scatter.csv')
        assert list(frame['name']) == analysis.names
        np.testing.assert_allclose(frame[['x', 'y', 'z']].to_numpy(), analysis.projections)
