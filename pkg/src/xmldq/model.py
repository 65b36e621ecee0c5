"""In-memory model of data-quality analysis patterns.

A pattern is a graph (whose return elements are the data regions reported
on a match) plus a nested first-order condition over further graphs, plus
a list of open parameters. Patterns exist at three abstraction levels:

* GENERIC      -- technology-independent: plain elements, relations and
                  properties.
* ABSTRACT_XML -- adapted to XML: elements become XML elements rooted in
                  an XmlRoot per graph, relations become axis navigations
                  or id references, properties carry a kind (name,
                  attribute or text content).
* CONCRETE     -- every parameter bound; executable.

Graphs of nested conditions extend the enclosing graph: they contain a
copy of everything already bound (linked through explicit morphism
mappings) plus the new elements quantified at that level. Builder methods
keep every intermediate state a structurally valid tree and register all
created parameters on the pattern's parameter list.
"""

from __future__ import annotations

import copy as _copylib
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Iterable, Iterator, Optional, Union


class PatternError(Exception):
    """Base error for pattern construction and manipulation."""


class BuildError(PatternError):
    """A builder call violated a structural precondition."""


class FrozenPatternError(PatternError):
    """Attempted mutation of a finalized pattern."""


class Level(Enum):
    GENERIC = "generic"
    ABSTRACT_XML = "abstract_xml"
    CONCRETE = "concrete"


class Quantifier(Enum):
    EXISTS = "exists"
    FORALL = "forall"


class BoolOp(Enum):
    AND = "and"
    OR = "or"


class CompareOp(Enum):
    LESS = "less"
    LESS_EQ = "less-equal"
    EQUAL = "equal"
    NOT_EQUAL = "unequal"
    GREATER_EQ = "greater-equal"
    GREATER = "greater"


class ValueType(Enum):
    STRING = "string"
    NUMBER = "number"
    BOOLEAN = "boolean"
    DATE = "date"
    TIME = "time"
    DATETIME = "datetime"
    UNSPECIFIED = "unspecified"


class Axis(Enum):
    CHILD = "child"
    DESCENDANT = "descendant"
    SELF = "self"
    DESCENDANT_OR_SELF = "descendant-or-self"
    FOLLOWING = "following"


ALL_AXES = (Axis.CHILD, Axis.DESCENDANT, Axis.SELF, Axis.DESCENDANT_OR_SELF, Axis.FOLLOWING)


class PropertyKind(Enum):
    NAME = "name"
    ATTRIBUTE = "attribute"
    DATA = "data"


ALL_PROPERTY_KINDS = (PropertyKind.NAME, PropertyKind.ATTRIBUTE, PropertyKind.DATA)
ALL_COMPARE_OPS = tuple(CompareOp)

# XML Schema 1.0 lexical forms (optional timezone).
_TZ = r"(Z|[+-](0[0-9]|1[0-4]):[0-5][0-9])?"
_DATE_BODY = r"-?[0-9]{4,}-(0[1-9]|1[0-2])-(0[1-9]|[12][0-9]|3[01])"
_TIME_BODY = r"(([01][0-9]|2[0-3]):[0-5][0-9]:[0-5][0-9](\.[0-9]+)?|24:00:00(\.0+)?)"
DATE_RE = re.compile(rf"^{_DATE_BODY}{_TZ}$")
TIME_RE = re.compile(rf"^{_TIME_BODY}{_TZ}$")
DATETIME_RE = re.compile(rf"^{_DATE_BODY}T{_TIME_BODY}{_TZ}$")


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


@dataclass
class Parameter:
    """Open slot of a pattern, set during concretisation.

    ``name`` is the user-facing binding key (e.g. ``Nav0``, ``ValueA``);
    it falls back to the internal id when unset.
    """

    pid: str
    name: Optional[str] = None
    description: Optional[str] = None

    @property
    def display_name(self) -> str:
        return self.name or self.pid

    def is_set(self) -> bool:
        raise NotImplementedError


@dataclass
class OptionParam(Parameter):
    """Parameter whose domain is a fixed enumeration of options.

    A single-option parameter is *predefined*: its value is fixed by the
    pattern author and may not be rebound. A multi-option parameter may
    carry a *preset* default that a later binding overrides.
    """

    options: tuple = ()
    value: Optional[Enum] = None
    preset: bool = False

    @property
    def predefined(self) -> bool:
        return len(self.options) == 1

    def is_set(self) -> bool:
        return self.value is not None


@dataclass
class ComparisonOptionParam(OptionParam):
    pass


@dataclass
class RelationOptionParam(OptionParam):
    pass


@dataclass
class PropertyOptionParam(OptionParam):
    pass


@dataclass
class TextLiteralParam(Parameter):
    value: Optional[str] = None

    def is_set(self) -> bool:
        return self.value is not None


@dataclass
class TextListParam(Parameter):
    values: Optional[tuple] = None

    def is_set(self) -> bool:
        return self.values is not None and len(self.values) > 0


@dataclass
class NumberParam(Parameter):
    value: Optional[Decimal] = None

    def is_set(self) -> bool:
        return self.value is not None


@dataclass
class BooleanParam(Parameter):
    value: Optional[bool] = None

    def is_set(self) -> bool:
        return self.value is not None


@dataclass
class DateParam(Parameter):
    value: Optional[str] = None
    lexical_re = DATE_RE

    def is_set(self) -> bool:
        return self.value is not None


@dataclass
class TimeParam(Parameter):
    value: Optional[str] = None
    lexical_re = TIME_RE

    def is_set(self) -> bool:
        return self.value is not None


@dataclass
class DateTimeParam(Parameter):
    value: Optional[str] = None
    lexical_re = DATETIME_RE

    def is_set(self) -> bool:
        return self.value is not None


@dataclass
class UnknownParameterValue(Parameter):
    """Placeholder for a literal whose type is decided at concretisation."""

    def is_set(self) -> bool:
        return False


VALUE_PARAM_TYPES = (
    TextLiteralParam,
    TextListParam,
    NumberParam,
    BooleanParam,
    DateParam,
    TimeParam,
    DateTimeParam,
)


# ---------------------------------------------------------------------------
# Graph structure
# ---------------------------------------------------------------------------

GENERIC = "generic"
XML_ELEMENT = "xml_element"
XML_ROOT = "xml_root"
XML_NAVIGATION = "xml_navigation"
XML_REFERENCE = "xml_reference"
XML_PROPERTY = "xml_property"


@dataclass
class Property:
    """A conditionable aspect of an element.

    Generic properties are bare slots; XML properties carry a kind
    parameter (name / attribute / data) and, when the attribute kind is
    selectable, the attribute-name text parameter.
    """

    pid: str
    owner: str  # element id
    subkind: str = GENERIC
    kind_param: Optional[PropertyOptionParam] = None
    attribute_name: Optional[TextLiteralParam] = None


@dataclass
class Element:
    eid: str
    subkind: str = GENERIC
    name: Optional[str] = None  # generic level only
    properties: list = field(default_factory=list)


@dataclass
class Relation:
    rid: str
    source: str  # element id
    target: str  # element id
    subkind: str = GENERIC
    # navigation only
    axis_param: Optional[RelationOptionParam] = None
    depth: int = 1
    # reference only
    source_property: Optional[str] = None  # property id
    target_property: Optional[str] = None


@dataclass
class Operand:
    """Argument of an operator: a graph component or a literal parameter."""

    kind: str  # "element" | "property" | "operator" | "param"
    target: str  # id of the referenced object


@dataclass
class Comparison:
    oid: str
    left: Operand
    right: Operand
    op_param: ComparisonOptionParam = None
    value_type: ValueType = ValueType.UNSPECIFIED


@dataclass
class Match:
    """Checks a property value against a regular expression."""

    oid: str
    property: str  # property id
    regex_param: TextLiteralParam = None


Operator = Union[Comparison, Match]


@dataclass
class Graph:
    gid: str
    elements: list = field(default_factory=list)
    relations: list = field(default_factory=list)
    operators: list = field(default_factory=list)
    return_elements: list = field(default_factory=list)  # element ids


@dataclass
class Morphism:
    """Explicit correspondence between a graph and the graph extending it."""

    source_graph: str
    target_graph: str
    element_mappings: list = field(default_factory=list)  # (source eid, target eid)
    relation_mappings: list = field(default_factory=list)  # (source rid, target rid)


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


class Condition:
    pass


@dataclass
class TrueCondition(Condition):
    """Innermost leaf; always satisfied."""


@dataclass
class QuantifiedCondition(Condition):
    quantifier: Quantifier
    graph: Graph = None
    morphism: Morphism = None
    inner: Condition = field(default_factory=TrueCondition)


@dataclass
class Formula(Condition):
    op: BoolOp
    left: Condition = field(default_factory=TrueCondition)
    right: Condition = field(default_factory=TrueCondition)


@dataclass
class NotCondition(Condition):
    inner: Condition = field(default_factory=TrueCondition)


@dataclass
class NumberElement:
    """Plain non-negative integer argument of a count comparison."""

    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or self.value < 0:
            raise BuildError(f"count threshold must be a non-negative integer, got {self.value!r}")


@dataclass
class CountPattern:
    """Sub-pattern whose value is the number of bindings of its new elements.

    Bindings may overlap on the matched data nodes; each distinct tuple
    over the unmapped elements counts once.
    """

    graph: Graph = None
    morphism: Morphism = None
    inner: Condition = field(default_factory=TrueCondition)


@dataclass
class CountCondition(Condition):
    count_pattern: CountPattern = None
    op: CompareOp = CompareOp.GREATER
    argument: Union[CountPattern, NumberElement] = None


# Condition tree paths: tuples of steps. Steps: "inner" (quantified / not),
# "left" / "right" (formula), "count" / "arg" (count condition sides).
Path = tuple


# ---------------------------------------------------------------------------
# Pattern
# ---------------------------------------------------------------------------


class Pattern:
    """A complete pattern: outer graph, condition tree, parameter list."""

    def __init__(self, name: str, level: Level):
        if not name:
            raise BuildError("pattern name must be non-empty")
        self.name = name
        self.level = level
        self.condition: Condition = TrueCondition()
        self.parameter_list: list = []
        self._counters: dict = {}
        self._frozen = False
        # id registries
        self._graphs: dict = {}
        self._elements: dict = {}
        self._relations: dict = {}
        self._properties: dict = {}
        self._operators: dict = {}
        self._params: dict = {}
        # copy lineage: copied object id -> immediate source id
        self._elem_src: dict = {}
        self._rel_src: dict = {}
        self._prop_src: dict = {}
        self.graph = self._new_graph()

    # -- identity and registries ------------------------------------------

    def _new_id(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0)
        self._counters[prefix] = n + 1
        return f"{prefix}{n}"

    def _new_graph(self) -> Graph:
        g = Graph(gid=self._new_id("g"))
        self._graphs[g.gid] = g
        return g

    def _check_mutable(self):
        if self._frozen:
            raise FrozenPatternError(f"pattern {self.name!r} is frozen")

    def freeze(self):
        self._frozen = True

    @property
    def frozen(self) -> bool:
        return self._frozen

    def graphs(self) -> list:
        """All graphs in condition-traversal order (outer graph first)."""
        out = [self.graph]

        def walk(cond: Condition):
            if isinstance(cond, QuantifiedCondition):
                out.append(cond.graph)
                walk(cond.inner)
            elif isinstance(cond, Formula):
                walk(cond.left)
                walk(cond.right)
            elif isinstance(cond, NotCondition):
                walk(cond.inner)
            elif isinstance(cond, CountCondition):
                out.append(cond.count_pattern.graph)
                walk(cond.count_pattern.inner)
                if isinstance(cond.argument, CountPattern):
                    out.append(cond.argument.graph)
                    walk(cond.argument.inner)

        walk(self.condition)
        return out

    def element(self, eid: str) -> Element:
        return self._elements[eid]

    def relation(self, rid: str) -> Relation:
        return self._relations[rid]

    def prop(self, pid: str) -> Property:
        return self._properties[pid]

    def operator(self, oid: str) -> Operator:
        return self._operators[oid]

    def param(self, pid: str) -> Parameter:
        return self._params[pid]

    def param_by_name(self, name: str) -> Optional[Parameter]:
        for p in self.parameter_list:
            if p.display_name == name:
                return p
        return None

    def graph_of_element(self, eid: str) -> Graph:
        for g in self._graphs.values():
            for e in g.elements:
                if e.eid == eid:
                    return g
        raise KeyError(eid)

    def graph_of_operator(self, oid: str) -> Graph:
        for g in self._graphs.values():
            for o in g.operators:
                if o.oid == oid:
                    return g
        raise KeyError(oid)

    def element_origin(self, eid: str) -> str:
        """Resolve a mapped copy to the element that first introduced it."""
        while eid in self._elem_src:
            eid = self._elem_src[eid]
        return eid

    def relation_origin(self, rid: str) -> str:
        while rid in self._rel_src:
            rid = self._rel_src[rid]
        return rid

    def property_origin(self, pid: str) -> str:
        while pid in self._prop_src:
            pid = self._prop_src[pid]
        return pid

    def copies_of_relation(self, rid: str) -> list:
        """The relation itself plus all its mapped copies, in id order."""
        out = [r for r in self._relations.values() if self.relation_origin(r.rid) == rid]
        out.sort(key=lambda r: r.rid)
        return out

    # -- condition tree paths ---------------------------------------------

    def condition_at(self, path: Path) -> Condition:
        cond = self.condition
        for step in path:
            cond = self._step(cond, step)
        return cond

    @staticmethod
    def _step(cond: Condition, step: str) -> Condition:
        if step == "inner" and isinstance(cond, (QuantifiedCondition, NotCondition)):
            return cond.inner
        if step == "left" and isinstance(cond, Formula):
            return cond.left
        if step == "right" and isinstance(cond, Formula):
            return cond.right
        if step == "count" and isinstance(cond, CountCondition):
            return cond.count_pattern.inner
        if step == "arg" and isinstance(cond, CountCondition) and isinstance(cond.argument, CountPattern):
            return cond.argument.inner
        raise BuildError(f"invalid condition path step {step!r} at {type(cond).__name__}")

    def _replace_at(self, path: Path, new: Condition):
        if not path:
            if not isinstance(self.condition, TrueCondition):
                raise BuildError("condition slot already occupied; builders replace true-leaves only")
            self.condition = new
            return
        parent = self.condition_at(path[:-1])
        step = path[-1]
        current = self._step(parent, step)
        if not isinstance(current, TrueCondition):
            raise BuildError("condition slot already occupied; builders replace true-leaves only")
        if step == "inner":
            parent.inner = new
        elif step == "left":
            parent.left = new
        elif step == "right":
            parent.right = new
        elif step == "count":
            parent.count_pattern.inner = new
        elif step == "arg":
            parent.argument.inner = new

    def enclosing_graph(self, path: Path) -> Graph:
        """Nearest graph lexically preceding the condition slot at ``path``."""
        g = self.graph
        cond = self.condition
        for step in path:
            if isinstance(cond, QuantifiedCondition) and step == "inner":
                g = cond.graph
            elif isinstance(cond, CountCondition) and step == "count":
                g = cond.count_pattern.graph
            elif isinstance(cond, CountCondition) and step == "arg":
                g = cond.argument.graph
            cond = self._step(cond, step)
        return g

    # -- builders: graph content ------------------------------------------

    def add_element(self, graph: Graph, name: Optional[str] = None) -> Element:
        self._check_mutable()
        subkind = GENERIC if self.level is Level.GENERIC else XML_ELEMENT
        e = Element(eid=self._new_id("e"), subkind=subkind, name=name if self.level is Level.GENERIC else None)
        graph.elements.append(e)
        self._elements[e.eid] = e
        return e

    def add_xml_root(self, graph: Graph) -> Element:
        self._check_mutable()
        e = Element(eid=self._new_id("e"), subkind=XML_ROOT)
        graph.elements.insert(0, e)
        self._elements[e.eid] = e
        return e

    def add_relation(self, graph: Graph, source: Element, target: Element) -> Relation:
        """Generic directed relation. Self-loops are permitted."""
        self._check_mutable()
        if self.level is not Level.GENERIC:
            raise BuildError("generic relations only exist at the generic level; use add_navigation/add_reference")
        self._require_in_graph(graph, source, target)
        r = Relation(rid=self._new_id("r"), source=source.eid, target=target.eid, subkind=GENERIC)
        graph.relations.append(r)
        self._relations[r.rid] = r
        return r

    def add_navigation(
        self,
        graph: Graph,
        source: Element,
        target: Element,
        axes: Iterable[Axis] = ALL_AXES,
        axis: Optional[Axis] = None,
        depth: int = 1,
    ) -> Relation:
        """Axis navigation edge; creates its axis option parameter."""
        self._check_mutable()
        if self.level is Level.GENERIC:
            raise BuildError("navigations only exist at XML levels")
        self._require_in_graph(graph, source, target)
        if depth < 1:
            raise BuildError("navigation depth must be >= 1")
        options = tuple(axes)
        param = RelationOptionParam(pid=self._new_id("par"), options=options, value=axis, preset=axis is not None)
        if axis is not None and axis not in options:
            raise BuildError(f"axis {axis} not among options {options}")
        if depth > 1 and axis is not Axis.CHILD:
            raise BuildError("depth > 1 requires the child axis")
        self._register_param(param)
        r = Relation(
            rid=self._new_id("r"),
            source=source.eid,
            target=target.eid,
            subkind=XML_NAVIGATION,
            axis_param=param,
            depth=depth,
        )
        graph.relations.append(r)
        self._relations[r.rid] = r
        return r

    def add_reference(self, graph: Graph, source: Element, target: Element) -> Relation:
        """Id-reference edge; inserts the value properties on both endpoints
        and the (predefined equal) comparison between them."""
        self._check_mutable()
        if self.level is Level.GENERIC:
            raise BuildError("references only exist at XML levels")
        self._require_in_graph(graph, source, target)
        sp = self.add_xml_property(source)
        tp = self.add_xml_property(target)
        r = Relation(
            rid=self._new_id("r"),
            source=source.eid,
            target=target.eid,
            subkind=XML_REFERENCE,
            source_property=sp.pid,
            target_property=tp.pid,
        )
        graph.relations.append(r)
        self._relations[r.rid] = r
        self.add_comparison(graph, sp, tp, options=(CompareOp.EQUAL,), value_type=ValueType.STRING)
        return r

    def add_property(self, element: Element) -> Property:
        """Bare generic property."""
        self._check_mutable()
        if self.level is not Level.GENERIC:
            raise BuildError("bare properties only exist at the generic level; use add_xml_property")
        p = Property(pid=self._new_id("p"), owner=element.eid, subkind=GENERIC)
        element.properties.append(p)
        self._properties[p.pid] = p
        return p

    def add_xml_property(
        self,
        element: Element,
        kinds: Iterable[PropertyKind] = ALL_PROPERTY_KINDS,
        kind: Optional[PropertyKind] = None,
        kind_param: Optional[PropertyOptionParam] = None,
        attribute_name: Optional[TextLiteralParam] = None,
    ) -> Property:
        """XML property with its kind parameter.

        Pass ``kind_param``/``attribute_name`` to share the parameters of
        another property (equivalent properties across graph branches).
        The attribute-name parameter exists only when the attribute kind
        is selectable.
        """
        self._check_mutable()
        if self.level is Level.GENERIC:
            raise BuildError("xml properties only exist at XML levels")
        if element.subkind == XML_ROOT:
            raise BuildError("the document root carries no properties")
        if kind_param is None:
            options = tuple(kinds)
            if kind is not None and kind not in options:
                raise BuildError(f"property kind {kind} not among options {options}")
            kind_param = PropertyOptionParam(pid=self._new_id("par"), options=options, value=kind)
            self._register_param(kind_param)
            if PropertyKind.ATTRIBUTE in options and attribute_name is None:
                attribute_name = TextLiteralParam(pid=self._new_id("par"))
                self._register_param(attribute_name)
        else:
            self._register_param(kind_param, allow_existing=True)
            if attribute_name is not None:
                self._register_param(attribute_name, allow_existing=True)
        p = Property(
            pid=self._new_id("p"),
            owner=element.eid,
            subkind=XML_PROPERTY,
            kind_param=kind_param,
            attribute_name=attribute_name,
        )
        element.properties.append(p)
        self._properties[p.pid] = p
        return p

    # -- builders: operators -----------------------------------------------

    def _operand(self, arg) -> Operand:
        if isinstance(arg, Element):
            return Operand("element", arg.eid)
        if isinstance(arg, Property):
            return Operand("property", arg.pid)
        if isinstance(arg, (Comparison, Match)):
            return Operand("operator", arg.oid)
        if isinstance(arg, Parameter):
            self._register_param(arg, allow_existing=True)
            return Operand("param", arg.pid)
        raise BuildError(f"cannot use {type(arg).__name__} as a comparison argument")

    def add_comparison(
        self,
        graph: Graph,
        left,
        right,
        options: Iterable[CompareOp] = ALL_COMPARE_OPS,
        value_type: ValueType = ValueType.STRING,
        op_param: Optional[ComparisonOptionParam] = None,
    ) -> Comparison:
        """Comparison operator; creates (or reuses) its operator parameter.

        The parameter is predefined exactly when a single option is given.
        Two element arguments restrict the options to equal / unequal.
        """
        self._check_mutable()
        lo, ro = self._operand(left), self._operand(right)
        if lo.kind == "param" and ro.kind == "param":
            raise BuildError("a comparison needs at least one graph component argument")
        options = tuple(options)
        if lo.kind == "element" and ro.kind == "element":
            bad = [o for o in options if o not in (CompareOp.EQUAL, CompareOp.NOT_EQUAL)]
            if bad:
                raise BuildError("element comparisons support equal/unequal only")
        if op_param is None:
            op_param = ComparisonOptionParam(
                pid=self._new_id("par"),
                options=options,
                value=options[0] if len(options) == 1 else None,
            )
            self._register_param(op_param)
        else:
            self._register_param(op_param, allow_existing=True)
        c = Comparison(oid=self._new_id("o"), left=lo, right=ro, op_param=op_param, value_type=value_type)
        graph.operators.append(c)
        self._operators[c.oid] = c
        self._check_operator_cycles(graph)
        return c

    def add_match(self, graph: Graph, prop: Property, regex: Optional[str] = None) -> Match:
        """Regular-expression check on a property."""
        self._check_mutable()
        if prop.pid not in self._properties:
            raise BuildError("unknown property")
        owner_graph = self.graph_of_element(prop.owner)
        if owner_graph.gid != graph.gid:
            raise BuildError("match property must belong to an element of the same graph")
        param = TextLiteralParam(pid=self._new_id("par"), value=regex)
        self._register_param(param)
        m = Match(oid=self._new_id("o"), property=prop.pid, regex_param=param)
        graph.operators.append(m)
        self._operators[m.oid] = m
        return m

    def _check_operator_cycles(self, graph: Graph):
        seen: dict = {}

        def visit(oid: str):
            state = seen.get(oid)
            if state == 1:
                raise BuildError("operator argument references must be acyclic")
            if state == 2:
                return
            seen[oid] = 1
            op = self._operators[oid]
            if isinstance(op, Comparison):
                for o in (op.left, op.right):
                    if o.kind == "operator":
                        visit(o.target)
            seen[oid] = 2

        for op in graph.operators:
            visit(op.oid)

    # -- builders: conditions ----------------------------------------------

    def add_formula(self, path: Path, op: BoolOp) -> Formula:
        self._check_mutable()
        f = Formula(op=op)
        self._replace_at(path, f)
        return f

    def add_not(self, path: Path) -> NotCondition:
        self._check_mutable()
        n = NotCondition()
        self._replace_at(path, n)
        return n

    def add_quantified(self, path: Path, quantifier: Quantifier) -> QuantifiedCondition:
        """Quantified extension of the enclosing graph.

        The new graph starts as a mapped copy of the lexically preceding
        graph; add the quantified elements to it afterwards.
        """
        self._check_mutable()
        base = self.enclosing_graph(path)
        q = QuantifiedCondition(quantifier=quantifier)
        q.graph, q.morphism = self._copy_graph(base)
        self._replace_at(path, q)
        return q

    def add_count(self, path: Path, op: CompareOp, argument) -> CountCondition:
        """Count condition. ``argument`` is a non-negative int (count vs
        number) or the string ``"count"`` (count vs count)."""
        self._check_mutable()
        base = self.enclosing_graph(path)
        cp = CountPattern()
        cp.graph, cp.morphism = self._copy_graph(base)
        if argument == "count":
            arg = CountPattern()
            arg.graph, arg.morphism = self._copy_graph(base)
        elif isinstance(argument, int) and not isinstance(argument, bool):
            arg = NumberElement(argument)
        else:
            raise BuildError("count argument must be a non-negative integer or 'count'")
        cc = CountCondition(count_pattern=cp, op=op, argument=arg)
        self._replace_at(path, cc)
        return cc

    def set_return(self, graph: Graph, elements: Iterable[Element]):
        self._check_mutable()
        eids = []
        for e in elements:
            if e not in graph.elements:
                raise BuildError("return elements must be members of the graph")
            eids.append(e.eid)
        graph.return_elements = eids

    def set_count_returns(self, count_pattern: CountPattern):
        """Make a count pattern report its new (unmapped) elements."""
        self._check_mutable()
        mapped = {t for _, t in count_pattern.morphism.element_mappings}
        count_pattern.graph.return_elements = [
            e.eid for e in count_pattern.graph.elements if e.eid not in mapped
        ]

    # -- graph copying -------------------------------------------------------

    def _copy_graph(self, base: Graph):
        g = self._new_graph()
        m = Morphism(source_graph=base.gid, target_graph=g.gid)
        emap: dict = {}
        for e in base.elements:
            c = Element(eid=self._new_id("e"), subkind=e.subkind, name=e.name)
            for p in e.properties:
                cp = Property(
                    pid=self._new_id("p"),
                    owner=c.eid,
                    subkind=p.subkind,
                    kind_param=p.kind_param,
                    attribute_name=p.attribute_name,
                )
                c.properties.append(cp)
                self._properties[cp.pid] = cp
                self._prop_src[cp.pid] = p.pid
            g.elements.append(c)
            self._elements[c.eid] = c
            self._elem_src[c.eid] = e.eid
            emap[e.eid] = c
            m.element_mappings.append((e.eid, c.eid))
        pmap = {}
        for e in base.elements:
            for p, cp in zip(e.properties, emap[e.eid].properties):
                pmap[p.pid] = cp
        for r in base.relations:
            c = Relation(
                rid=self._new_id("r"),
                source=emap[r.source].eid,
                target=emap[r.target].eid,
                subkind=r.subkind,
                axis_param=None,  # mapped navigations inherit the axis
                depth=r.depth,
                source_property=pmap[r.source_property].pid if r.source_property else None,
                target_property=pmap[r.target_property].pid if r.target_property else None,
            )
            g.relations.append(c)
            self._relations[c.rid] = c
            self._rel_src[c.rid] = r.rid
            m.relation_mappings.append((r.rid, c.rid))
        g.return_elements = [emap[eid].eid for eid in base.return_elements]
        return g, m

    # -- parameter management ----------------------------------------------

    def _register_param(self, param: Parameter, allow_existing: bool = False):
        if param.pid in self._params:
            if allow_existing:
                return
            raise BuildError(f"parameter id {param.pid} already registered")
        # Externally constructed parameters get a pattern-scoped id.
        if not param.pid or param.pid in self._params:
            param.pid = self._new_id("par")
        self._params[param.pid] = param
        self.parameter_list.append(param)

    def make_text_param(self, value: Optional[str] = None) -> TextLiteralParam:
        self._check_mutable()
        p = TextLiteralParam(pid=self._new_id("par"), value=value)
        self._register_param(p)
        return p

    def make_text_list_param(self, values=None) -> TextListParam:
        self._check_mutable()
        p = TextListParam(pid=self._new_id("par"), values=tuple(values) if values is not None else None)
        self._register_param(p)
        return p

    def make_number_param(self, value=None) -> NumberParam:
        self._check_mutable()
        if value is not None and not isinstance(value, Decimal):
            try:
                value = Decimal(str(value))
            except InvalidOperation as exc:
                raise BuildError(f"invalid number literal {value!r}") from exc
        p = NumberParam(pid=self._new_id("par"), value=value)
        self._register_param(p)
        return p

    def make_boolean_param(self, value=None) -> BooleanParam:
        self._check_mutable()
        p = BooleanParam(pid=self._new_id("par"), value=value)
        self._register_param(p)
        return p

    def make_unknown_param(self) -> UnknownParameterValue:
        self._check_mutable()
        p = UnknownParameterValue(pid=self._new_id("par"))
        self._register_param(p)
        return p

    def make_temporal_param(self, cls, value: Optional[str] = None):
        self._check_mutable()
        if cls not in (DateParam, TimeParam, DateTimeParam):
            raise BuildError("temporal parameter must be date, time or datetime")
        if value is not None and not cls.lexical_re.match(value):
            raise BuildError(f"value {value!r} violates the {cls.__name__} lexical form")
        p = cls(pid=self._new_id("par"), value=value)
        self._register_param(p)
        return p

    def replace_parameter(self, old_param: Parameter, new: Parameter) -> Parameter:
        """Swap a parameter object in place, keeping id, name and position.

        Used to replace an unknown placeholder by its concrete typed value;
        operand references identify parameters by id and stay intact.
        """
        self._check_mutable()
        if old_param.pid not in self._params:
            raise BuildError(f"unknown parameter {old_param.pid}")
        new.pid = old_param.pid
        new.name = old_param.name
        new.description = old_param.description
        self._params[new.pid] = new
        idx = self.parameter_list.index(old_param)
        self.parameter_list[idx] = new
        return new

    # -- referenced parameters ----------------------------------------------

    def referenced_params(self) -> list:
        """Parameters reachable from the pattern tree, in traversal order."""
        seen = []
        seen_ids = set()

        def add(p: Optional[Parameter]):
            if p is not None and p.pid not in seen_ids:
                seen_ids.add(p.pid)
                seen.append(p)

        for g in self.graphs():
            for e in g.elements:
                for p in e.properties:
                    add(p.kind_param)
                    add(p.attribute_name)
            for r in g.relations:
                add(r.axis_param)
            for o in g.operators:
                if isinstance(o, Comparison):
                    add(o.op_param)
                    for side in (o.left, o.right):
                        if side.kind == "param":
                            add(self._params.get(side.target))
                else:
                    add(o.regex_param)
        return seen

    def assert_parameter_closure(self):
        """Tree-reachable parameters and parameter_list agree as sets."""
        reachable = {p.pid for p in self.referenced_params()}
        listed = {p.pid for p in self.parameter_list}
        if reachable != listed:
            missing = reachable - listed
            extra = listed - reachable
            raise PatternError(f"parameter list out of sync (missing={missing}, unreferenced={extra})")

    # -- misc ---------------------------------------------------------------

    def _require_in_graph(self, graph: Graph, *elements: Element):
        for e in elements:
            if e not in graph.elements:
                raise BuildError(f"element {e.eid} is not part of graph {graph.gid}")

    def new_elements(self, graph: Graph) -> list:
        """Elements of ``graph`` that are not mapped copies."""
        return [e for e in graph.elements if e.eid not in self._elem_src]

    def counterpart(self, graph: Graph, element: Element) -> Element:
        """The copy of ``element`` living in ``graph`` (mapping-equivalent)."""
        origin = self.element_origin(element.eid)
        for e in graph.elements:
            if self.element_origin(e.eid) == origin:
                return e
        raise BuildError(f"element {element.eid} has no counterpart in graph {graph.gid}")

    def property_counterpart(self, graph: Graph, prop: Property) -> Property:
        """The copy of ``prop`` living in ``graph``."""
        origin = self.property_origin(prop.pid)
        for e in graph.elements:
            for q in e.properties:
                if self.property_origin(q.pid) == origin:
                    return q
        raise BuildError(f"property {prop.pid} has no counterpart in graph {graph.gid}")

    def incoming_navigations(self, graph: Graph, element: Element) -> list:
        return [
            r
            for r in graph.relations
            if r.target == element.eid and r.subkind == XML_NAVIGATION
        ]

    def element_order(self) -> dict:
        """Global order of origin elements: graph traversal, then insertion.

        Mapped copies share the slot of their origin. The document roots
        participate (they bind the root element of the data document).
        """
        order: dict = {}
        n = 0
        for g in self.graphs():
            for e in g.elements:
                origin = self.element_origin(e.eid)
                if origin not in order:
                    order[origin] = n
                    n += 1
        return order


def new_pattern(name: str, level: Level) -> Pattern:
    """Fresh pattern: empty outer graph, true condition, no parameters."""
    return Pattern(name, level)
