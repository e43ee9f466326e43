"""
Tests for chunked text encoding, fusion and the summary decoder
"""

import numpy as np
import pytest

from discograms.core.gradcheck import grad_check
from discograms.core.tensor import Tensor
from discograms.nn.decoder import SummaryDecoder
from discograms.nn.encoders import ChunkPooler, TextEncoder, chunk_script
from discograms.nn.fusion import FusionBlock
from discograms.nn.vocab import Vocabulary
from discograms.utils.exceptions import LengthExceeded, ShapeMismatch, VocabularyMiss


@pytest.fixture
def rng():
    return np.random.default_rng(5)


class TestChunkScript:

    def test_greedy_sizes(self):
        text = ' '.join(f't{i}' for i in range(10))
        assert [len(c) for c in chunk_script(text, 4)] == [4, 4, 2]

    def test_exact_fit(self):
        assert chunk_script('a b c d', 4) == [['a', 'b', 'c', 'd']]

    def test_empty(self):
        assert chunk_script('', 4) == [[]]

    def test_order_preserved(self):
        chunks = chunk_script('one two three four five', 2)
        assert [t for chunk in chunks for t in chunk] == ['one', 'two', 'three', 'four', 'five']

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            chunk_script('a b', 0)


class TestTextEncoder:

    @pytest.fixture
    def encoder(self, rng):
        vocab = Vocabulary(['alice', 'bob', 'rain', 'door'])
        return TextEncoder(vocab, 8, 2, 6, 16, 2, 0.0, rng).eval()

    @pytest.mark.parametrize('k', [1, 2, 7])
    def test_output_shape(self, encoder, k):
        chunks = [['alice', 'rain', 'door'][: 1 + i % 3] for i in range(k)]
        assert encoder(chunks).shape == (1, 16)

    def test_empty_chunk(self, encoder):
        assert encoder([[]]).shape == (1, 16)

    def test_unknown_tokens_map_to_unk(self, encoder):
        np.testing.assert_allclose(encoder([['zebra']]).data, encoder([['<unk>']]).data)

    def test_duplicated_chunks_pool_identically(self, encoder):
        chunks = [['alice', 'rain'], ['bob'], ['door', 'door', 'alice']]
        doubled = [chunk for chunk in chunks for _ in range(2)]
        np.testing.assert_allclose(encoder(doubled).data, encoder(chunks).data, atol=1e-5)

    def test_chunk_too_long(self, encoder):
        with pytest.raises(ShapeMismatch):
            encoder([['alice'] * 7])

    def test_needs_a_chunk(self, encoder):
        with pytest.raises(ShapeMismatch):
            encoder([])


class TestChunkPooler:

    def test_duplicates_with_tied_keys(self, rng):
        pooler = ChunkPooler(8, 16, 4, 0.0, rng).astype(np.float64)
        chunks = rng.normal(size=(4, 8))
        single = pooler(Tensor(chunks))
        doubled = pooler(Tensor(np.repeat(chunks, 2, axis=0)))
        np.testing.assert_allclose(doubled.data, single.data, atol=1e-10)

    def test_rejects_empty(self, rng):
        with pytest.raises(ShapeMismatch):
            ChunkPooler(8, 16, 4, 0.0, rng)(Tensor(np.zeros((0, 8))))


class TestFusion:

    @pytest.fixture
    def fusion(self, rng):
        return FusionBlock(16, 2, 0.0, rng).astype(np.float64)

    def test_zero_inputs_follow_bias_path(self, fusion, rng):
        for linear in (fusion.attention.value, fusion.attention.output, fusion.collapse, fusion.output):
            linear.bias.data = rng.normal(size=linear.bias.shape)
        zero = Tensor(np.zeros((1, 16)))
        out = fusion(zero, zero).data

        # every value row is the value bias, so attention returns it whatever the weights
        attended = fusion.attention.value.bias.data @ fusion.attention.output.weight.data \
            + fusion.attention.output.bias.data
        mixed = np.concatenate([attended, attended])[None, :]
        hidden = np.maximum(mixed @ fusion.collapse.weight.data + fusion.collapse.bias.data, 0)
        expected = hidden @ fusion.output.weight.data + fusion.output.bias.data
        np.testing.assert_allclose(out, expected, atol=1e-10)
        np.testing.assert_array_equal(fusion(zero, zero).data, out)

    def test_gradients_reach_both_inputs(self, fusion, rng):
        g = Tensor(rng.normal(size=(1, 16)))
        t = Tensor(rng.normal(size=(1, 16)))
        w = Tensor(rng.normal(size=(1, 16)))
        assert grad_check(lambda v: (fusion(v, t) * w).sum(), g)
        assert grad_check(lambda v: (fusion(g, v) * w).sum(), t)

        g_leaf = Tensor(g.data, requires_grad=True)
        t_leaf = Tensor(t.data, requires_grad=True)
        (fusion(g_leaf, t_leaf) * w).sum().backward()
        assert np.abs(g_leaf.grad).sum() > 0
        assert np.abs(t_leaf.grad).sum() > 0

    def test_shape_mismatch(self, fusion):
        with pytest.raises(ShapeMismatch):
            fusion(Tensor(np.zeros((1, 16))), Tensor(np.zeros((2, 16))))


class TestDecoder:

    @pytest.fixture
    def vocab(self):
        return Vocabulary(['the', 'rain', 'stops'])

    @pytest.fixture
    def decoder(self, vocab, rng):
        return SummaryDecoder(vocab, 16, 1, 2, 32, 6, 0.0, rng).eval()

    def test_uniform_logits_give_log_vocab(self, decoder, vocab):
        decoder.projection.weight.data[:] = 0.0
        decoder.projection.bias.data[:] = 0.0
        loss = decoder.loss(Tensor(np.ones((1, 16))), ['rain'])
        assert loss.item() == pytest.approx(np.log(len(vocab)), abs=1e-6)

    def test_logits_shape(self, decoder, vocab):
        logits = decoder(Tensor(np.ones((1, 16))), [vocab.bos_id, 4, 5])
        assert logits.shape == (3, len(vocab))

    def test_causal(self, decoder, vocab):
        memory = Tensor(np.ones((1, 16)))
        a = decoder(memory, [vocab.bos_id, 4, 5]).data
        b = decoder(memory, [vocab.bos_id, 6, 6]).data
        np.testing.assert_allclose(a[0], b[0], atol=1e-6)
        assert not np.allclose(a[1], b[1])

    def test_greedy_respects_cap(self, decoder):
        out = decoder.greedy(Tensor(np.ones((1, 16))))
        assert len(out) <= decoder.max_len - 1
        assert decoder.greedy(Tensor(np.ones((1, 16)))) == out

    def test_target_too_long(self, decoder):
        with pytest.raises(LengthExceeded):
            decoder.loss(Tensor(np.ones((1, 16))), ['rain'] * 6)
        assert decoder.target_ids(['rain'] * 5)

    def test_unknown_target_token(self, decoder):
        with pytest.raises(VocabularyMiss):
            decoder.loss(Tensor(np.ones((1, 16))), ['snow'])

    def test_memory_shape(self, decoder):
        with pytest.raises(ShapeMismatch):
            decoder(Tensor(np.ones((2, 16))), [1])

    def test_vocabulary_round_trip(self, vocab):
        restored = Vocabulary.from_json(vocab.to_json())
        assert restored.tokens == vocab.tokens
        assert vocab.decode(vocab.encode(['the', 'rain']) + [vocab.eos_id, 4]) == ['the', 'rain']
