"""
Tests for the assembled LGAT model, its variants and checkpoints
"""

import json

import numpy as np
import pytest

from discograms.core.gradcheck import grad_check
from discograms.core.tensor import Tensor
from discograms.nn.gat import edge_index, node_features
from discograms.nn.lgat import CONFIG_FILE, LgatModel, Variant, decode, encode_graph, encode_text, fuse
from discograms.services.graph_service import build_graph
from discograms.services.embedding_service import HashingEmbedder
from discograms.utils.exceptions import ConfigMismatch, ShapeMismatch, UnreadableFile

TARGET = ['alice', 'waits', 'for', 'bob']


class TestVariants:

    @pytest.mark.parametrize('variant, graph, text, fusion', [
        ('full', True, True, True),
        ('full_without_characters', True, True, True),
        ('text_only', False, True, False),
        ('graph_only', True, False, False),
    ])
    def test_modules_built(self, make_model, variant, graph, text, fusion):
        model = make_model(variant)
        assert (model.graph_encoder is not None) == graph
        assert (model.text_encoder is not None) == text
        assert (model.fusion is not None) == fusion

    @pytest.mark.parametrize('variant', [v.value for v in Variant])
    def test_memory_shape(self, make_model, variant, example_graph, example_chunks, testing_config):
        model = make_model(variant)
        assert model.memory(example_graph, example_chunks).shape == (1, testing_config.arch_dim)
        assert model.loss(example_graph, example_chunks, TARGET).item() > 0

    def test_single_modality_checkpoints_are_smaller(self, make_model):
        full = sum(p.data.size for p in make_model('full').parameters())
        text_only = sum(p.data.size for p in make_model('text_only').parameters())
        assert text_only < full

    def test_without_characters_strips_input(self, make_model, example_graph):
        model = make_model('full_without_characters')
        seen = model.input_graph(example_graph)
        assert len(seen.characters) == 0 and seen.edges_cd == () and seen.edges_sc == ()
        assert len(make_model('full').input_graph(example_graph).characters) == 2

    def test_missing_encoders(self, make_model, example_graph, example_chunks):
        with pytest.raises(ConfigMismatch):
            make_model('text_only').encode_graph(example_graph)
        with pytest.raises(ConfigMismatch):
            make_model('graph_only').encode_text(example_chunks)
        with pytest.raises(ConfigMismatch):
            make_model('text_only').node_embeddings(example_graph)

    def test_graph_dim_checked(self, make_model, example_screenplay):
        graph = build_graph(example_screenplay, HashingEmbedder(32))
        with pytest.raises(ShapeMismatch):
            make_model().encode_graph(graph)


class TestComposition:

    def test_functional_surface(self, make_model, example_graph, example_chunks, testing_config):
        model = make_model()
        graph_enc = encode_graph(model, example_graph)
        text_enc = encode_text(model, example_chunks)
        fused = fuse(model, graph_enc, text_enc)
        assert fused.shape == (1, testing_config.arch_dim)

        logits = decode(model, fused, TARGET)
        assert logits.shape == (len(TARGET) + 1, len(model.target_vocab))
        tokens = decode(model, fused)
        assert len(tokens) <= testing_config.max_target_len - 1

    def test_node_embeddings(self, make_model, example_graph, testing_config):
        nodes = make_model().node_embeddings(example_graph)
        width = testing_config.gat_heads * testing_config.gat_hidden
        assert nodes['character'].shape == (2, width)
        assert nodes['scene'].shape == (3, width)

    def test_whole_model_gradients(self, make_model, example_graph, example_chunks):
        model = make_model().astype(np.float64).eval()
        index = edge_index(example_graph)
        text_enc = model.encode_text(example_chunks).detach()

        def graph_path(x):
            h = x
            for layer in model.graph_encoder.layers:
                h, _ = layer(h, index)
            graph_enc = model.graph_encoder.readout(h.mean(axis=0, keepdims=True))
            return model.decoder.loss(model.fuse(graph_enc, text_enc), TARGET)

        features = Tensor(node_features(example_graph).data.astype(np.float64))
        assert index.node_count <= 10
        assert grad_check(graph_path, features, tol=1e-3)

        graph_enc = model.encode_graph(example_graph).detach()
        assert grad_check(lambda t: model.decoder.loss(model.fuse(graph_enc, t), TARGET), text_enc, tol=1e-3)

    def test_generation_is_deterministic(self, make_model, example_graph, example_chunks, testing_config):
        model = make_model().eval()
        first = model.generate(example_graph, example_chunks)
        assert model.generate(example_graph, example_chunks) == first
        assert len(first) <= testing_config.max_target_len - 1

    def test_backward_fills_parameter_gradients(self, make_model, example_graph, example_chunks):
        model = make_model()
        model.loss(example_graph, example_chunks, TARGET).backward()
        with_grad = [name for name, p in model.named_parameters() if p.grad is not None]
        assert any(name.startswith('graph_encoder.') for name in with_grad)
        assert any(name.startswith('text_encoder.') for name in with_grad)
        assert any(name.startswith('fusion.') for name in with_grad)


class TestCheckpoint:

    def test_round_trip(self, make_model, tmp_path, example_graph, example_chunks):
        model = make_model().eval()
        model.save(tmp_path)
        restored = LgatModel.load(tmp_path)
        assert restored.variant is Variant.FULL
        assert restored.config == model.config
        for (name, p), (other, q) in zip(model.named_parameters(), restored.named_parameters()):
            assert name == other
            np.testing.assert_array_equal(p.data, q.data)
        assert restored.generate(example_graph, example_chunks) == model.generate(example_graph, example_chunks)

    def test_variant_recorded(self, make_model, tmp_path):
        make_model('graph_only').save(tmp_path)
        assert LgatModel.load(tmp_path).variant is Variant.GRAPH_ONLY

    def test_with_optimizer(self, make_model, tmp_path):
        model = make_model()
        model.save(tmp_path)
        restored, optimizer = LgatModel.load(tmp_path, with_optimizer=True)
        assert optimizer.step_count == 0
        assert len(optimizer.params) == len(restored.parameters())

    def test_config_hash_mismatch(self, make_model, tmp_path):
        make_model().save(tmp_path)
        path = tmp_path / CONFIG_FILE
        data = json.loads(path.read_text(encoding='utf-8'))
        data['seed'] += 1
        path.write_text(json.dumps(data), encoding='utf-8')
        with pytest.raises(ConfigMismatch):
            LgatModel.load(tmp_path)

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(UnreadableFile):
            LgatModel.load(tmp_path / 'missing')
