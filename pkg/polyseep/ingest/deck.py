"""Input-deck subset: ``*USER ELEMENT``, ``*NODE``, ``*ELEMENT`` and
``*UEL PROPERTY``.

Keyword lines start with ``*``, records are comma separated, ``**`` starts
a comment and keywords are case-insensitive. Anything else is reported
as a diagnostic carrying its line number.

"""
import math
import re
from collections import OrderedDict

from attr import (
    attrs,
    attrib,
    Factory,
)
from twisted.logger import Logger
from typing import (  # noqa
    Any,
    Dict,
    List,
    Optional,
    Tuple,
    Union,
)

from polyseep.constants import FORMAT_VERSION
from polyseep.exceptions import DeckParseError, ModelError
from polyseep.types import JSONDict  # noqa

log = Logger()

USER_ELEMENT = "USER ELEMENT"
NODE = "NODE"
ELEMENT = "ELEMENT"
UEL_PROPERTY = "UEL PROPERTY"
KEYWORDS = frozenset([USER_ELEMENT, NODE, ELEMENT, UEL_PROPERTY])

TYPE_TAG_RE = re.compile(r"^U(?P<n>[1-9]\d*)$")

# misspellings seen in the wild, accepted with a warning
OPTION_ALIASES = {"ELEST": "ELSET"}

WARNING = "warning"
ERROR = "error"


@attrs(frozen=True)
class Diagnostic(object):
    line = attrib()  # type: int
    message = attrib()  # type: str
    severity = attrib(default=WARNING)  # type: str

    def __str__(self):
        return "line {}: {}: {}".format(self.line, self.severity,
                                        self.message)


@attrs
class UserElementDef(object):
    """``*USER ELEMENT`` definition"""
    type_tag = attrib()  # type: str
    nodes = attrib()  # type: int
    properties = attrib(default=0)  # type: int
    coordinates = attrib(default=2)  # type: int
    active_dofs = attrib(default=Factory(tuple))  # type: Tuple[int, ...]
    line = attrib(default=0)  # type: int


@attrs(frozen=True)
class DeckElement(object):
    id = attrib()  # type: int
    node_ids = attrib()  # type: Tuple[int, ...]
    type_tag = attrib()  # type: str
    line = attrib(default=0)  # type: int


@attrs
class DeckModel(object):
    """Everything a deck defines"""
    nodes = attrib(
        default=Factory(OrderedDict)
    )  # type: Dict[int, Tuple[float, float]]
    user_elements = attrib(
        default=Factory(OrderedDict))  # type: Dict[str, UserElementDef]
    elements = attrib(
        default=Factory(OrderedDict)
    )  # type: Dict[str, List[DeckElement]]
    element_sets = attrib(
        default=Factory(OrderedDict))  # type: Dict[str, List[int]]
    properties = attrib(
        default=Factory(OrderedDict)
    )  # type: Dict[str, Tuple[float, ...]]
    diagnostics = attrib(default=Factory(list))  # type: List[Diagnostic]

    def all_elements(self):
        # type: () -> List[DeckElement]
        out = []  # type: List[DeckElement]
        for block in self.elements.values():
            out.extend(block)
        return sorted(out, key=lambda e: e.id)

    def errors(self):
        # type: () -> List[Diagnostic]
        return [d for d in self.diagnostics if d.severity == ERROR]


def _split_record(text):
    # type: (str) -> List[str]
    return [field.strip() for field in text.split(",")]


def _int(text, lineno, what):
    # type: (str, int, str) -> int
    try:
        return int(text)
    except ValueError:
        raise DeckParseError("invalid {}: {!r}".format(what, text), lineno)


def _float(text, lineno, what):
    # type: (str, int, str) -> float
    try:
        value = float(text)
    except ValueError:
        raise DeckParseError("invalid {}: {!r}".format(what, text), lineno)
    if not math.isfinite(value):
        raise DeckParseError("non-finite {}: {!r}".format(what, text),
                             lineno)
    return value


class _DeckParser(object):
    """Line-oriented state machine over the keyword subset"""

    def __init__(self):
        self.deck = DeckModel()
        self.keyword = None  # type: Optional[str]
        self.options = {}  # type: Dict[str, Optional[str]]
        self.pending = None  # type: Optional[UserElementDef]
        self.carry = ""
        self.carry_line = 0
        self.element_ids = set()  # type: set

    def parse(self, text):
        # type: (str) -> DeckModel
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("**"):
                continue
            if line.startswith("*"):
                self._flush_carry()
                self._keyword(line, lineno)
                continue
            if self.keyword is None:
                raise DeckParseError("data line outside a keyword block",
                                     lineno)
            if line.endswith(","):
                # record continues on the next line
                if not self.carry:
                    self.carry_line = lineno
                self.carry += line
                continue
            if self.carry:
                line, lineno = self.carry + line, self.carry_line
                self.carry = ""
            self._data(line, lineno)
        self._flush_carry()
        if self.pending is not None:
            raise DeckParseError("*USER ELEMENT without active dof line",
                                 self.pending.line)
        return self.deck

    def _flush_carry(self):
        if self.carry:
            line, self.carry = self.carry.rstrip(","), ""
            self._data(line, self.carry_line)

    def _keyword(self, line, lineno):
        # type: (str, int) -> None
        if self.pending is not None:
            raise DeckParseError("*USER ELEMENT without active dof line",
                                 self.pending.line)
        fields = _split_record(line[1:])
        keyword = " ".join(fields[0].upper().split())
        options = {}  # type: Dict[str, Optional[str]]
        for item in fields[1:]:
            if not item:
                continue
            key, sep, value = item.partition("=")
            key = " ".join(key.upper().split())
            if key in OPTION_ALIASES:
                self.deck.diagnostics.append(Diagnostic(
                    lineno, "option {} read as {}".format(
                        key, OPTION_ALIASES[key])))
                key = OPTION_ALIASES[key]
            options[key] = value.strip() if sep else None

        if keyword not in KEYWORDS:
            self.deck.diagnostics.append(Diagnostic(
                lineno, "unrecognized keyword *{}".format(keyword), ERROR))
            log.debug("Skipping keyword", keyword=keyword, line=lineno)
            # data lines of an unknown block are skipped, not errors
            self.keyword = "SKIP"
            return
        self.keyword = keyword
        self.options = options
        if keyword == USER_ELEMENT:
            self._user_element(options, lineno)
        elif keyword == ELEMENT:
            tag = self._type_tag(options, lineno)
            self.deck.elements.setdefault(tag, [])
            elset = options.get("ELSET")
            if elset is not None:
                if not elset:
                    raise DeckParseError("empty ELSET name", lineno)
                self.deck.element_sets.setdefault(elset, [])
        elif keyword == UEL_PROPERTY:
            elset = options.get("ELSET")
            if not elset:
                raise DeckParseError("*UEL PROPERTY needs ELSET", lineno)
            if elset not in self.deck.element_sets:
                raise DeckParseError(
                    "reference to undefined set {!r}".format(elset), lineno)
            if elset in self.deck.properties:
                raise DeckParseError(
                    "duplicate *UEL PROPERTY for {!r}".format(elset), lineno)

    def _type_tag(self, options, lineno):
        # type: (Dict[str, Optional[str]], int) -> str
        tag = (options.get("TYPE") or "").upper()
        if not TYPE_TAG_RE.match(tag):
            raise DeckParseError(
                "element TYPE must be Un, got {!r}".format(tag), lineno)
        return tag

    def _user_element(self, options, lineno):
        # type: (Dict[str, Optional[str]], int) -> None
        tag = self._type_tag(options, lineno)
        if "NODES" not in options or options["NODES"] is None:
            raise DeckParseError("*USER ELEMENT needs NODES", lineno)
        nodes = _int(options["NODES"], lineno, "NODES")
        expected = int(TYPE_TAG_RE.match(tag).group("n"))
        if nodes != expected:
            raise DeckParseError(
                "NODES={} does not match TYPE={}".format(nodes, tag), lineno)
        if tag in self.deck.user_elements:
            raise DeckParseError("duplicate *USER ELEMENT {}".format(tag),
                                 lineno)
        props = options.get("PROPERTIES")
        coords = options.get("COORDINATES")
        self.pending = UserElementDef(
            type_tag=tag,
            nodes=nodes,
            properties=_int(props, lineno, "PROPERTIES") if props else 0,
            coordinates=_int(coords, lineno, "COORDINATES") if coords else 2,
            line=lineno,
        )
        if self.pending.coordinates != 2:
            raise DeckParseError("only COORDINATES=2 is supported", lineno)

    def _data(self, line, lineno):
        # type: (str, int) -> None
        if self.keyword == "SKIP":
            return
        fields = [f for f in _split_record(line) if f != ""]
        if not fields:
            raise DeckParseError("empty record", lineno)
        if self.keyword == USER_ELEMENT:
            if self.pending is None:
                raise DeckParseError("unexpected record after active dofs",
                                     lineno)
            self.pending.active_dofs = tuple(
                _int(f, lineno, "active dof") for f in fields)
            self.deck.user_elements[self.pending.type_tag] = self.pending
            self.pending = None
        elif self.keyword == NODE:
            if len(fields) not in (3, 4):
                raise DeckParseError("node record needs id, x, y", lineno)
            nid = _int(fields[0], lineno, "node id")
            if nid < 0:
                raise DeckParseError("negative node id", lineno)
            if nid in self.deck.nodes:
                raise DeckParseError("duplicate node {}".format(nid), lineno)
            self.deck.nodes[nid] = (_float(fields[1], lineno, "x"),
                                    _float(fields[2], lineno, "y"))
        elif self.keyword == ELEMENT:
            self._element(fields, lineno)
        elif self.keyword == UEL_PROPERTY:
            elset = self.options["ELSET"]
            if elset in self.deck.properties:
                raise DeckParseError("extra property record", lineno)
            values = tuple(_float(f, lineno, "property") for f in fields)
            self._check_property_count(elset, values, lineno)
            self.deck.properties[elset] = values

    def _element(self, fields, lineno):
        # type: (List[str], int) -> None
        tag = self.options["TYPE"].upper()
        ids = [_int(f, lineno, "element record") for f in fields]
        eid, node_ids = ids[0], tuple(ids[1:])
        expected = int(TYPE_TAG_RE.match(tag).group("n"))
        if len(node_ids) != expected:
            raise DeckParseError(
                "element {} of type {} lists {} nodes".format(
                    eid, tag, len(node_ids)), lineno)
        if len(set(node_ids)) != len(node_ids):
            raise DeckParseError("element {} repeats a node".format(eid),
                                 lineno)
        if eid in self.element_ids:
            raise DeckParseError("duplicate element {}".format(eid), lineno)
        self.element_ids.add(eid)
        self.deck.elements[tag].append(DeckElement(eid, node_ids, tag,
                                                   lineno))
        elset = self.options.get("ELSET")
        if elset:
            self.deck.element_sets[elset].append(eid)

    def _check_property_count(self, elset, values, lineno):
        members = set(self.deck.element_sets[elset])
        for el in self.deck.all_elements():
            uel = self.deck.user_elements.get(el.type_tag)
            if el.id in members and uel is not None and uel.properties and \
                    uel.properties != len(values):
                raise DeckParseError(
                    "{} expects {} properties, got {}".format(
                        el.type_tag, uel.properties, len(values)), lineno)


def parse_inp(text):
    # type: (Union[str, bytes]) -> DeckModel
    """Parse input-deck text into a :class:`DeckModel`.

    Unrecognized keywords become ``error`` diagnostics; hard errors raise
    :class:`DeckParseError` naming the line.

    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return _DeckParser().parse(text)


def deck_to_native(deck, overlay=None):
    # type: (DeckModel, Optional[JSONDict]) -> JSONDict
    """Native model structure for a deck plus overlay.

    The overlay carries what the deck subset can not say: ``ss`` (a number
    or a per-set mapping), ``boundary_conditions``, ``schedules``,
    ``transient``, ``monitors`` and ``title``.

    """
    overlay = dict(overlay or {})
    errors = deck.errors()
    if errors:
        raise ModelError("Deck uses unsupported keywords: {}".format(
            "; ".join(str(d) for d in errors)))
    ss = overlay.pop("ss", 0.0)

    materials = {}  # type: JSONDict
    material_of = {}  # type: Dict[int, str]
    for elset, members in deck.element_sets.items():
        if elset not in deck.properties:
            raise ModelError(
                "Element set {!r} has no *UEL PROPERTY".format(elset))
        props = deck.properties[elset]
        if len(props) < 2:
            raise ModelError(
                "Element set {!r} needs two properties (kx, ky)".format(
                    elset))
        set_ss = ss.get(elset, 0.0) if isinstance(ss, dict) else ss
        materials[elset] = {"kx": props[0], "ky": props[1], "ss": set_ss}
        for eid in members:
            material_of.setdefault(eid, elset)

    elements = []
    for el in deck.all_elements():
        if el.id not in material_of:
            raise ModelError(
                "Element {} belongs to no property set".format(el.id))
        elements.append({"id": el.id, "nodes": list(el.node_ids),
                         "material": material_of[el.id]})

    data = {
        "format_version": FORMAT_VERSION,
        "mesh": {
            "nodes": [{"id": nid, "x": x, "y": y}
                      for nid, (x, y) in deck.nodes.items()],
            "elements": elements,
            "boundary_edges": overlay.pop("boundary_edges", []),
        },
        "materials": materials,
    }
    data.update(overlay)
    return data


def deck_to_model(deck, overlay=None):
    """Resolve a deck plus overlay into a :class:`SeepageModel`"""
    from polyseep.ingest.native import model_from_dict
    return model_from_dict(deck_to_native(deck, overlay))
