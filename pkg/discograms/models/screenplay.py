"""
Screenplay Model for the DiscoGraMS pipeline

This module defines the parsed screenplay and its parts. All values are
immutable so parsed screenplays can be shared between threads.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field


@dataclass(frozen=True)
class Dialogue:
    """A line spoken by a character; ``speaker`` is already normalized"""
    speaker: str
    text: str

    kind = 'dialogue'


@dataclass(frozen=True)
class Action:
    """Action or scene description text"""
    text: str

    kind = 'action'


ScriptElement = Union[Dialogue, Action]


@dataclass(frozen=True)
class Scene:
    """
    One scene of a screenplay

    ``description`` is the concatenation of the scene's action texts;
    ``cast`` holds normalized names of characters listed as present
    without necessarily speaking.
    """
    index: int
    heading: str = ''
    description: str = ''
    elements: Tuple[ScriptElement, ...] = ()
    cast: Tuple[str, ...] = ()

    @classmethod
    def build(cls, index: int, heading: str, elements: List[ScriptElement],
              cast: Tuple[str, ...] = ()) -> 'Scene':
        description = ' '.join(e.text for e in elements if isinstance(e, Action))
        return cls(index=index, heading=heading, description=description,
                   elements=tuple(elements), cast=tuple(cast))

    @property
    def dialogues(self) -> List[Dialogue]:
        return [e for e in self.elements if isinstance(e, Dialogue)]

    @property
    def speakers(self) -> List[str]:
        """Distinct speakers in order of first line"""
        seen: Dict[str, None] = {}
        for d in self.dialogues:
            seen.setdefault(d.speaker, None)
        return list(seen)


@dataclass(frozen=True)
class CharacterRegistry:
    """Dense ids (0..m-1) for normalized character names, in first-appearance order"""
    names: Tuple[str, ...] = ()
    _ids: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._ids.update({name: i for i, name in enumerate(self.names)})

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def id_of(self, name: str) -> int:
        return self._ids[name]


@dataclass(frozen=True)
class Screenplay:
    """A parsed screenplay with contiguous scene indices in document order"""
    id: str
    title: str
    scenes: Tuple[Scene, ...]

    @property
    def characters(self) -> CharacterRegistry:
        """Registry of every name referenced by a dialogue or a cast list"""
        seen: Dict[str, None] = {}
        for scene in self.scenes:
            for name in scene.cast:
                seen.setdefault(name, None)
            for d in scene.dialogues:
                seen.setdefault(d.speaker, None)
        return CharacterRegistry(tuple(seen))

    @property
    def dialogues(self) -> List[Tuple[int, Dialogue]]:
        """All dialogues as (scene index, dialogue) in document order"""
        return [(s.index, d) for s in self.scenes for d in s.dialogues]

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready representation"""
        return {
            'schema_version': 1,
            'id': self.id,
            'title': self.title,
            'scenes': [
                {
                    'index': s.index,
                    'heading': s.heading,
                    'cast': list(s.cast),
                    'elements': [
                        {'type': 'dialogue', 'speaker': e.speaker, 'text': e.text}
                        if isinstance(e, Dialogue) else {'type': 'action', 'text': e.text}
                        for e in s.elements
                    ],
                }
                for s in self.scenes
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Screenplay':
        """Inverse of ``to_dict``"""
        scenes = []
        for i, raw in enumerate(data['scenes']):
            elements: List[ScriptElement] = []
            for e in raw.get('elements', []):
                if e['type'] == 'dialogue':
                    elements.append(Dialogue(speaker=e['speaker'], text=e['text']))
                else:
                    elements.append(Action(text=e['text']))
            scenes.append(Scene.build(i, raw.get('heading', ''), elements, tuple(raw.get('cast', ()))))
        return cls(id=data.get('id', ''), title=data.get('title', ''), scenes=tuple(scenes))


class SummarySource(str, Enum):
    """Where a reference summary came from"""
    IMDB = 'imdb'
    WIKIPEDIA = 'wikipedia'
    OTHER = 'other'


class ReferenceSummary(BaseModel):
    """Gold plot summary for one screenplay"""

    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    text: str = Field(min_length=1)
    source: SummarySource = SummarySource.OTHER

    @property
    def screenplay_id(self) -> str:
        return self.id


@dataclass(frozen=True)
class CorpusPair:
    """A screenplay with its reference summary"""
    screenplay: Screenplay
    summary: ReferenceSummary
    source_path: Optional[str] = None
