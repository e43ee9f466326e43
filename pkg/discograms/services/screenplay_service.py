"""
Screenplay Service for the DiscoGraMS pipeline
Parses screenplay documents and ingests reference summaries
"""

import json
import logging
import re
from pathlib import Path
from typing import BinaryIO, Dict, List, Optional, Tuple, Union

from lxml import etree
from pydantic import ValidationError

from discograms.models.screenplay import (
    Action, CorpusPair, Dialogue, ReferenceSummary, Scene, Screenplay, ScriptElement
)
from discograms.utils.exceptions import (
    DuplicateId, EmptyScreenplay, MalformedXml, MissingField, SchemaViolation, UnreadableFile
)
from discograms.utils.helpers import normalize_name, normalize_whitespace

logger = logging.getLogger(__name__)

CAST_SEPARATOR = ';'
SUMMARY_FILE = 'summaries.jsonl'

_HEADING_PREFIX = re.compile(r'^(INT\.|EXT\.|INT/EXT\.?|I/E\.?)', re.IGNORECASE)
_PARENTHETICAL_LINE = re.compile(r'^\([^()]*\)$')
MAX_CUE_LENGTH = 40


# XML

def parse_xml(document: Union[bytes, BinaryIO]) -> Screenplay:
    """
    Parse a screenplay in the canonical XML schema

    Args:
        document: UTF-8 bytes or a binary stream

    Returns:
        Screenplay with scenes in document order

    Raises:
        MalformedXml: If the bytes are not parseable UTF-8 XML
        SchemaViolation: On unknown elements or dialogue without a speaker
        EmptyScreenplay: If there are no scenes
    """
    if hasattr(document, 'read'):
        document = document.read()
    try:
        document.decode('utf-8')
    except UnicodeDecodeError as e:
        raise MalformedXml(f"Screenplay is not valid UTF-8: {e}") from e

    parser = etree.XMLParser(resolve_entities=False, no_network=True, remove_comments=True,
                             remove_pis=True)
    try:
        root = etree.fromstring(document, parser=parser)
    except etree.XMLSyntaxError as e:
        raise MalformedXml(f"Screenplay XML is not well-formed: {e}") from e

    if root.tag != 'screenplay':
        raise SchemaViolation(f"Root element must be <screenplay>, got <{root.tag}>")

    scenes = []
    for child in root:
        if child.tag != 'scene':
            raise SchemaViolation(f"Unknown element <{child.tag}> under <screenplay>",
                                  {'line': child.sourceline})
        _reject_stray_text(child.tail, 'screenplay')
        scenes.append(_parse_scene(child, len(scenes)))
    _reject_stray_text(root.text, 'screenplay')

    if not scenes:
        raise EmptyScreenplay("Screenplay contains no scenes")

    screenplay = Screenplay(id=root.get('id', ''), title=normalize_whitespace(root.get('title', '')),
                            scenes=tuple(scenes))
    logger.debug(f"Parsed XML screenplay '{screenplay.id}' with {len(scenes)} scenes")
    return screenplay


def _parse_scene(element, index: int) -> Scene:
    elements: List[ScriptElement] = []
    _reject_stray_text(element.text, 'scene')
    for child in element:
        _reject_stray_text(child.tail, 'scene')
        if len(child):
            raise SchemaViolation(f"<{child.tag}> must not contain elements",
                                  {'line': child.sourceline})
        text = normalize_whitespace(child.text)
        if child.tag == 'action':
            if text:
                elements.append(Action(text=text))
        elif child.tag == 'dialogue':
            raw_speaker = child.get('speaker')
            if raw_speaker is None:
                raise SchemaViolation("<dialogue> without speaker attribute",
                                      {'line': child.sourceline, 'scene': index})
            speaker = normalize_name(raw_speaker)
            if not speaker:
                raise SchemaViolation("<dialogue> speaker is empty after normalization",
                                      {'line': child.sourceline, 'scene': index})
            if not text:
                raise SchemaViolation("<dialogue> has no text",
                                      {'line': child.sourceline, 'scene': index})
            elements.append(Dialogue(speaker=speaker, text=text))
        else:
            raise SchemaViolation(f"Unknown element <{child.tag}> under <scene>",
                                  {'line': child.sourceline})

    cast = _parse_cast(element.get('cast', ''))
    return Scene.build(index, normalize_whitespace(element.get('heading', '')), elements, cast)


def _parse_cast(raw: str) -> Tuple[str, ...]:
    names: Dict[str, None] = {}
    for part in raw.split(CAST_SEPARATOR):
        name = normalize_name(part)
        if name:
            names.setdefault(name, None)
    return tuple(names)


def _reject_stray_text(text: Optional[str], parent: str) -> None:
    if text and text.strip():
        raise SchemaViolation(f"Unexpected text directly under <{parent}>: {text.strip()[:40]!r}")


def to_xml(screenplay: Screenplay) -> bytes:
    """
    Serialize a screenplay to the canonical XML schema

    Args:
        screenplay: Screenplay to serialize

    Returns:
        UTF-8 encoded XML document
    """
    root = etree.Element('screenplay', id=screenplay.id, title=screenplay.title)
    for scene in screenplay.scenes:
        scene_el = etree.SubElement(root, 'scene', heading=scene.heading)
        if scene.cast:
            scene_el.set('cast', CAST_SEPARATOR.join(scene.cast))
        for element in scene.elements:
            if isinstance(element, Dialogue):
                el = etree.SubElement(scene_el, 'dialogue', speaker=element.speaker)
            else:
                el = etree.SubElement(scene_el, 'action')
            el.text = element.text
    return etree.tostring(root, encoding='UTF-8', xml_declaration=True, pretty_print=True)


# Plain text

def _is_all_caps(line: str) -> bool:
    return any(c.isalpha() for c in line) and line == line.upper()


def _is_cue(line: str) -> bool:
    return (_is_all_caps(line) and not line.endswith(':')
            and len(line) <= MAX_CUE_LENGTH and bool(normalize_name(line)))


def parse_plaintext(document: str, screenplay_id: str = '', title: str = '') -> Screenplay:
    """
    Heuristic parse of a plain-text screenplay

    A line starting with INT./EXT. (or an all-caps line followed by a blank
    line) opens a scene. A short all-caps line directly followed by text is a
    speaker cue; the following non-blank lines are that character's dialogue,
    with whole-line parentheticals dropped. Everything else is action.
    Content before the first heading lands in a synthetic scene 0.

    Args:
        document: Screenplay text
        screenplay_id: Id for the result
        title: Title for the result

    Returns:
        Screenplay

    Raises:
        EmptyScreenplay: If the document has no content
    """
    lines = [line.strip() for line in document.splitlines()]
    scenes: List[Scene] = []
    heading: Optional[str] = None
    elements: List[ScriptElement] = []
    action_lines: List[str] = []
    opened = False

    def flush_action():
        text = normalize_whitespace(' '.join(action_lines))
        if text:
            elements.append(Action(text=text))
        action_lines.clear()

    def close_scene():
        flush_action()
        if opened or elements:
            scenes.append(Scene.build(len(scenes), heading or '', list(elements)))
        elements.clear()

    i = 0
    while i < len(lines):
        line = lines[i]
        next_line = lines[i + 1] if i + 1 < len(lines) else ''
        if not line:
            flush_action()
            i += 1
            continue

        if _HEADING_PREFIX.match(line) or (_is_all_caps(line) and not next_line
                                           and not line.endswith(':')):
            close_scene()
            heading = normalize_whitespace(line)
            opened = True
            i += 1
            continue

        if _is_cue(line) and next_line:
            flush_action()
            speaker = normalize_name(line)
            spoken = []
            i += 1
            while i < len(lines) and lines[i]:
                if not _PARENTHETICAL_LINE.match(lines[i]):
                    spoken.append(lines[i])
                i += 1
            text = normalize_whitespace(' '.join(spoken))
            if text:
                elements.append(Dialogue(speaker=speaker, text=text))
            continue

        action_lines.append(line)
        i += 1

    close_scene()

    if not scenes:
        raise EmptyScreenplay("Plain-text screenplay has no content")

    logger.debug(f"Parsed plain-text screenplay with {len(scenes)} scenes")
    return Screenplay(id=screenplay_id, title=title, scenes=tuple(scenes))


def parse_file(path: Union[str, Path], fmt: Optional[str] = None) -> Screenplay:
    """
    Parse a screenplay file, picking the parser from ``fmt`` or the suffix

    Args:
        path: Screenplay file
        fmt: 'xml' or 'txt'; None infers from the suffix

    Returns:
        Screenplay (id falls back to the file stem)
    """
    path = Path(path)
    fmt = fmt or ('xml' if path.suffix.lower() == '.xml' else 'txt')
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise UnreadableFile(f"Cannot read {path}: {e}", {'path': str(path)}) from e

    if fmt == 'xml':
        screenplay = parse_xml(raw)
    else:
        try:
            text = raw.decode('utf-8')
        except UnicodeDecodeError as e:
            raise UnreadableFile(f"{path} is not UTF-8: {e}", {'path': str(path)}) from e
        screenplay = parse_plaintext(text, screenplay_id=path.stem, title=path.stem)

    if not screenplay.id:
        screenplay = Screenplay(id=path.stem, title=screenplay.title, scenes=screenplay.scenes)
    return screenplay


def screenplay_to_text(screenplay: Screenplay) -> str:
    """
    Render a screenplay as plain text (headings, action, "SPEAKER: line")

    Args:
        screenplay: Parsed screenplay

    Returns:
        Newline-joined script text
    """
    return '\n'.join(scene_to_text(scene) for scene in screenplay.scenes if scene.heading or scene.elements)


def scene_to_text(scene: Scene) -> str:
    """One scene as heading, action lines and "SPEAKER: line" dialogue"""
    lines = [scene.heading] if scene.heading else []
    for element in scene.elements:
        if isinstance(element, Dialogue):
            lines.append(f"{element.speaker}: {element.text}")
        else:
            lines.append(element.text)
    return '\n'.join(lines)


# Summaries and corpora

def load_summaries(path: Union[str, Path]) -> Dict[str, ReferenceSummary]:
    """
    Load reference summaries from a JSON-lines file

    Args:
        path: File with one {"id", "text", "source"} object per line

    Returns:
        Mapping of screenplay id to summary

    Raises:
        UnreadableFile: If the file cannot be read
        MissingField: If a record lacks a required field
        DuplicateId: If an id repeats
    """
    try:
        content = Path(path).read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise UnreadableFile(f"Cannot read summaries {path}: {e}", {'path': str(path)}) from e

    summaries: Dict[str, ReferenceSummary] = {}
    for line_no, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaViolation(f"Line {line_no} is not JSON: {e}", {'line': line_no}) from e
        if not isinstance(record, dict):
            raise SchemaViolation(f"Line {line_no} is not a JSON object", {'line': line_no})

        for required in ('id', 'text', 'source'):
            if required not in record:
                raise MissingField(f"Line {line_no} is missing '{required}'",
                                   {'line': line_no, 'field': required})

        try:
            summary = ReferenceSummary(id=str(record['id']),
                                       text=normalize_whitespace(str(record['text'])),
                                       source=record['source'])
        except ValidationError as e:
            raise SchemaViolation(f"Line {line_no} is invalid: {e}", {'line': line_no}) from e

        if summary.id in summaries:
            raise DuplicateId(f"Duplicate summary id '{summary.id}' on line {line_no}",
                              {'line': line_no, 'id': summary.id})
        summaries[summary.id] = summary

    logger.info(f"Loaded {len(summaries)} reference summaries from {path}")
    return summaries


def load_corpus(directory: Union[str, Path]) -> List[CorpusPair]:
    """
    Load a training corpus directory

    The directory holds screenplay files (*.xml or *.txt) and a
    ``summaries.jsonl`` file keyed by screenplay id.

    Args:
        directory: Corpus directory

    Returns:
        Pairs sorted by screenplay id
    """
    directory = Path(directory)
    summaries = load_summaries(directory / SUMMARY_FILE)

    pairs = []
    script_paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in ('.xml', '.txt'))
    for path in script_paths:
        screenplay = parse_file(path)
        summary = summaries.get(screenplay.id)
        if summary is None:
            logger.warning(f"No summary for screenplay '{screenplay.id}' ({path.name}); skipped")
            continue
        pairs.append(CorpusPair(screenplay=screenplay, summary=summary, source_path=str(path)))

    pairs.sort(key=lambda p: p.screenplay.id)
    logger.info(f"Loaded corpus of {len(pairs)} pairs from {directory}")
    return pairs
