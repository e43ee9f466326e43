"""
Shared fixtures for the DiscoGraMS test suite
"""

import logging

import numpy as np
import pytest

from discograms.config import load_settings
from discograms.models.screenplay import (
    Action, CorpusPair, Dialogue, ReferenceSummary, Scene, Screenplay
)
from discograms.nn.encoders import chunk_script
from discograms.nn.lgat import LgatModel
from discograms.nn.vocab import Vocabulary
from discograms.services.embedding_service import HashingEmbedder
from discograms.services.graph_service import build_graph
from discograms.services.screenplay_service import parse_xml, screenplay_to_text


# Alice speaks twice in scene 0 and once in scene 1, Bob once in scene 2.
EXAMPLE_XML = b"""<?xml version="1.0" encoding="UTF-8"?>
<screenplay id="example" title="Example">
  <scene heading="INT. KITCHEN - DAY">
    <action>Alice makes coffee while the radio plays.</action>
    <dialogue speaker="Alice">Morning.</dialogue>
    <dialogue speaker="ALICE (V.O.)">Is anyone up?</dialogue>
  </scene>
  <scene heading="EXT. GARDEN - DAY">
    <action>Rain falls on the roses.</action>
    <dialogue speaker="alice">Where did everyone go?</dialogue>
  </scene>
  <scene heading="INT. HALL - NIGHT">
    <action>Bob steps inside, soaked to the bone.</action>
    <dialogue speaker="Bob">Sorry I am late.</dialogue>
  </scene>
</screenplay>
"""

ENSEMBLE_XML = b"""<?xml version="1.0" encoding="UTF-8"?>
<screenplay id="ensemble" title="Ensemble">
  <scene heading="INT. OFFICE - DAY">
    <action>Papers everywhere. The phone rings.</action>
    <dialogue speaker="MARGO">Answer that.</dialogue>
    <dialogue speaker="TEDDY">You answer it.</dialogue>
  </scene>
  <scene heading="EXT. PARKING LOT - DAY" cast="LENA">
    <action>Lena waits by the car.</action>
    <dialogue speaker="TEDDY">She is here already.</dialogue>
    <dialogue speaker="VICTOR">Then we leave now.</dialogue>
  </scene>
  <scene heading="INT. CAR - NIGHT">
    <action>Silence on the highway.</action>
    <dialogue speaker="LENA">Nobody talks about the money.</dialogue>
    <dialogue speaker="VICTOR">Nobody has to.</dialogue>
    <dialogue speaker="MARGO">Drive.</dialogue>
  </scene>
  <scene heading="INT. DINER - NIGHT">
    <action>Coffee cups and a long bill.</action>
    <dialogue speaker="LENA">We split it four ways.</dialogue>
    <dialogue speaker="TEDDY">Three. Victor is gone.</dialogue>
  </scene>
</screenplay>
"""

NAMES = ('ANNA', 'BORIS', 'CLARA', 'DMITRI', 'ELENA')
WORDS = ('door', 'rain', 'letter', 'train', 'knife', 'garden', 'river', 'lamp', 'coat', 'bridge',
         'window', 'silence', 'money', 'night', 'smoke', 'glass', 'street', 'key', 'dog', 'song')


def random_screenplay(seed, max_scenes=10, max_characters=5, max_dialogues=20, screenplay_id=None):
    """Seeded synthetic screenplay; optional cast lists add non-speaking appearances."""
    rng = np.random.default_rng(seed)
    n_scenes = int(rng.integers(1, max_scenes + 1))
    names = list(NAMES[:int(rng.integers(0, max_characters + 1))])
    n_dialogues = int(rng.integers(0, max_dialogues + 1)) if names else 0
    scene_of = np.sort(rng.integers(0, n_scenes, size=n_dialogues))

    def sentence(low, high):
        return ' '.join(rng.choice(WORDS, size=int(rng.integers(low, high + 1))))

    scenes = []
    for index in range(n_scenes):
        elements = [Action(text=sentence(2, 6))]
        for _ in range(int(np.sum(scene_of == index))):
            elements.append(Dialogue(speaker=str(rng.choice(names)), text=sentence(1, 5)))
        cast = ()
        if names and rng.random() < 0.3:
            cast = tuple(str(n) for n in rng.choice(names, size=int(rng.integers(1, len(names) + 1)),
                                                     replace=False))
        scenes.append(Scene.build(index, f"INT. ROOM {index}", elements, cast))
    return Screenplay(id=screenplay_id or f"synthetic-{seed}", title=f"Synthetic {seed}", scenes=tuple(scenes))


def random_corpus(count, seed=0, summary_length=6):
    rng = np.random.default_rng(seed + 1000)
    pairs = []
    for i in range(count):
        screenplay = random_screenplay(seed + i, max_scenes=4, max_dialogues=8, screenplay_id=f"movie-{i}")
        text = ' '.join(rng.choice(WORDS, size=summary_length))
        pairs.append(CorpusPair(screenplay, ReferenceSummary(id=screenplay.id, text=text)))
    return pairs


@pytest.fixture(autouse=True)
def reset_package_logger():
    """The CLI detaches the package logger; give every test a clean one."""
    yield
    root = logging.getLogger('discograms')
    root.handlers.clear()
    root.propagate = True
    root.setLevel(logging.NOTSET)


@pytest.fixture
def example_xml():
    return EXAMPLE_XML


@pytest.fixture
def example_screenplay():
    return parse_xml(EXAMPLE_XML)


@pytest.fixture
def ensemble_screenplay():
    return parse_xml(ENSEMBLE_XML)


@pytest.fixture
def embedder():
    return HashingEmbedder(16, seed=0)


@pytest.fixture
def example_graph(example_screenplay, embedder):
    return build_graph(example_screenplay, embedder)


@pytest.fixture
def ensemble_graph(ensemble_screenplay, embedder):
    return build_graph(ensemble_screenplay, embedder)


@pytest.fixture
def testing_config():
    return load_settings('testing')


@pytest.fixture
def make_model(testing_config, example_screenplay):
    """Untrained model over the example script with a fixed target vocabulary."""
    def factory(variant='full', config=None, target='alice waits for bob in the rain'):
        config = config or testing_config
        source = Vocabulary.build([screenplay_to_text(example_screenplay)], min_freq=1)
        return LgatModel(config, source, Vocabulary.build([target]), variant)
    return factory


@pytest.fixture
def example_chunks(example_screenplay, testing_config):
    return chunk_script(screenplay_to_text(example_screenplay), testing_config.max_tokens)
