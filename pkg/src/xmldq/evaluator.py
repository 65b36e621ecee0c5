"""Native evaluation of concrete patterns over XML documents.

The evaluator mirrors the nested-loop semantics of the generated queries:
bindings enumerate nodes along navigations, filtered by the predicates
anchored at each element; quantified conditions extend a binding
existentially or universally; count conditions compare the number of
distinct extension tuples. A node is reported iff some binding of the
outer graph maps a return element to it and the condition holds.

Paths are rooted at the document's root element. Comparison casts that
fail (e.g. a non-numeric string under a numeric comparison) make the
predicate false rather than raising; a comparison over an absent
attribute is false, matching the empty-sequence behaviour of the
corresponding query, which for a negated list membership means the
negation holds.
"""

from __future__ import annotations

import re
import time
import xml.parsers.expat
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Dict, Iterator, List, Optional

from .model import (
    Axis,
    BooleanParam,
    Comparison,
    CompareOp,
    CountCondition,
    CountPattern,
    DateParam,
    DateTimeParam,
    Formula,
    Level,
    Match,
    NotCondition,
    NumberElement,
    NumberParam,
    Pattern,
    PatternError,
    PropertyKind,
    QuantifiedCondition,
    Quantifier,
    TextListParam,
    TextLiteralParam,
    TimeParam,
    TrueCondition,
    ValueType,
    XML_ELEMENT,
    XML_NAVIGATION,
    XML_ROOT,
)


class DocumentParseError(PatternError):
    """Malformed XML, with line/column diagnostics."""


class EvaluationError(PatternError):
    """The pattern is not executable."""


@dataclass
class Node:
    idx: int
    name: str
    attrs: dict
    parent: Optional[int]
    children: list = field(default_factory=list)
    content: list = field(default_factory=list)  # child indices and text chunks, in order
    end: int = 0  # first pre-order index after this subtree


class DocumentIndex:
    """Immutable in-memory XML document: one rooted element tree in
    document order, names and attributes kept as written (prefixes are not
    resolved)."""

    def __init__(self, nodes: List[Node], max_depth: int):
        self.nodes = nodes
        self.root = 0
        self.element_count = len(nodes)
        self.max_depth = max_depth
        self._string_values: dict = {}
        self._children_by_name: dict = {}

    def children(self, idx: int) -> list:
        return self.nodes[idx].children

    def children_named(self, idx: int, name: str) -> list:
        cache = self._children_by_name.get(idx)
        if cache is None:
            cache = {}
            for c in self.nodes[idx].children:
                cache.setdefault(self.nodes[c].name, []).append(c)
            self._children_by_name[idx] = cache
        return cache.get(name, [])

    def descendants(self, idx: int) -> range:
        return range(idx + 1, self.nodes[idx].end)

    def following(self, idx: int) -> range:
        return range(self.nodes[idx].end, len(self.nodes))

    def string_value(self, idx: int) -> str:
        cached = self._string_values.get(idx)
        if cached is None:
            parts = []
            for item in self.nodes[idx].content:
                if isinstance(item, str):
                    parts.append(item)
                else:
                    parts.append(self.string_value(item))
            cached = "".join(parts)
            self._string_values[idx] = cached
        return cached

    def path(self, idx: int) -> str:
        """Absolute path with 1-based indices among same-name siblings,
        e.g. ``/data/architect[1]``."""
        steps = []
        node = self.nodes[idx]
        while node.parent is not None:
            siblings = [c for c in self.nodes[node.parent].children if self.nodes[c].name == node.name]
            steps.append(f"{node.name}[{siblings.index(node.idx) + 1}]")
            node = self.nodes[node.parent]
        steps.append(node.name)
        return "/" + "/".join(reversed(steps))


def load_document(data) -> DocumentIndex:
    """Parse XML text or bytes into a document index."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    parser = xml.parsers.expat.ParserCreate(namespace_separator=None)
    nodes: List[Node] = []
    stack: List[int] = []
    state = {"max_depth": 0}

    def start(name, attrs):
        idx = len(nodes)
        parent = stack[-1] if stack else None
        if parent is None and nodes:
            raise DocumentParseError("multiple root elements")
        node = Node(idx=idx, name=name, attrs=dict(attrs), parent=parent)
        nodes.append(node)
        if parent is not None:
            nodes[parent].children.append(idx)
            nodes[parent].content.append(idx)
        stack.append(idx)
        state["max_depth"] = max(state["max_depth"], len(stack))

    def end(name):
        idx = stack.pop()
        nodes[idx].end = len(nodes)

    def chars(text):
        if stack:
            nodes[stack[-1]].content.append(text)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(data, True)
    except xml.parsers.expat.ExpatError as exc:
        raise DocumentParseError(
            f"malformed XML at line {parser.ErrorLineNumber}, column {parser.ErrorColumnNumber}: "
            f"{xml.parsers.expat.errors.messages[parser.ErrorCode]}"
        ) from exc
    if not nodes:
        raise DocumentParseError("document has no root element")
    return DocumentIndex(nodes, state["max_depth"])


@dataclass
class MatchSet:
    pattern: str
    nodes: list  # node indices, document order, deduplicated
    binding_count: int
    duration_s: float
    document: DocumentIndex

    def paths(self) -> list:
        return [self.document.path(i) for i in self.nodes]


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_DAYS_BEFORE_MONTH = (0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334)

_TZ_RE = re.compile(r"(Z|[+-]\d\d:\d\d)$")


def _days_from_civil(y: int, m: int, d: int) -> int:
    y -= m <= 2
    era = (y if y >= 0 else y - 399) // 400
    yoe = y - era * 400
    doy = (153 * (m + (-3 if m > 2 else 9)) + 2) // 5 + d - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def _split_tz(text: str):
    m = _TZ_RE.search(text)
    if not m:
        return text, 0
    tz = m.group(1)
    body = text[: m.start()]
    if tz == "Z":
        return body, 0
    sign = 1 if tz[0] == "+" else -1
    return body, sign * (int(tz[1:3]) * 3600 + int(tz[4:6]) * 60)


def _temporal_key(text: str, value_type: ValueType):
    """Timeline key for date/time/dateTime lexical values; None if invalid."""
    from .model import DATE_RE, DATETIME_RE, TIME_RE

    text = text.strip()
    try:
        if value_type is ValueType.DATE:
            if not DATE_RE.match(text):
                return None
            body, off = _split_tz(text)
            neg = body.startswith("-")
            if neg:
                body = body[1:]
            y, m, d = body.split("-")
            days = _days_from_civil(-int(y) if neg else int(y), int(m), int(d))
            return days * 86400 - off
        if value_type is ValueType.TIME:
            if not TIME_RE.match(text):
                return None
            body, off = _split_tz(text)
            h, mi, s = body.split(":")
            return Decimal(h) * 3600 + Decimal(mi) * 60 + Decimal(s) - off
        if value_type is ValueType.DATETIME:
            if not DATETIME_RE.match(text):
                return None
            body, off = _split_tz(text)
            date_part, time_part = body.split("T")
            neg = date_part.startswith("-")
            if neg:
                date_part = date_part[1:]
            y, m, d = date_part.split("-")
            h, mi, s = time_part.split(":")
            days = _days_from_civil(-int(y) if neg else int(y), int(m), int(d))
            return Decimal(days) * 86400 + Decimal(h) * 3600 + Decimal(mi) * 60 + Decimal(s) - off
    except (ValueError, InvalidOperation):
        return None
    return None


def _compare(op: CompareOp, left, right) -> bool:
    if op is CompareOp.EQUAL:
        return left == right
    if op is CompareOp.NOT_EQUAL:
        return left != right
    if op is CompareOp.LESS:
        return left < right
    if op is CompareOp.LESS_EQ:
        return left <= right
    if op is CompareOp.GREATER:
        return left > right
    return left >= right


class _Evaluator:
    def __init__(self, pattern: Pattern, doc: DocumentIndex):
        self.p = pattern
        self.doc = doc
        self.binding: Dict[str, int] = {}
        order = pattern.element_order()
        self._pos = {eid: i for i, eid in enumerate(order)}
        self._graph_info: dict = {}
        for g in pattern.graphs():
            self._graph_info[g.gid] = self._prepare_graph(g)
        for g in pattern.graphs():
            for e in g.elements:
                if e.subkind == XML_ROOT:
                    self.binding[pattern.element_origin(e.eid)] = doc.root

    # -- preparation ---------------------------------------------------------

    def _prepare_graph(self, g):
        new = [e for e in self.p.new_elements(g) if e.subkind == XML_ELEMENT]
        incoming = {}
        for e in new:
            navs = self.p.incoming_navigations(g, e)
            if len(navs) != 1:
                raise EvaluationError(f"element {e.eid} needs exactly one incoming navigation")
            incoming[e.eid] = navs[0]
        ordered = []
        emitted = set()
        pending = list(new)
        while pending:
            progressed = False
            for e in list(pending):
                src = incoming[e.eid].source
                if any(src == x.eid for x in pending):
                    continue
                ordered.append(e)
                emitted.add(e.eid)
                pending.remove(e)
                progressed = True
            if not progressed:
                raise EvaluationError("cyclic navigation structure")
        anchored: dict = {}
        nested = set()
        for op in g.operators:
            if isinstance(op, Comparison):
                for side in (op.left, op.right):
                    if side.kind == "operator":
                        nested.add(side.target)
        for op in g.operators:
            if op.oid in nested:
                continue
            elems = self._op_elements(op)
            if not elems:
                raise EvaluationError(f"operator {op.oid} references no element")
            anchor = max(elems, key=lambda eid: self._pos[eid])
            anchored.setdefault(anchor, []).append(op)
        new_origins = {self.p.element_origin(e.eid) for e in ordered}
        entry = [ops for anchor, ops in anchored.items() if anchor not in new_origins]
        entry = [op for ops in entry for op in ops]
        plans = []
        for e in ordered:
            nav = incoming[e.eid]
            origin_nav = self.p._relations[self.p.relation_origin(nav.rid)]
            axis = origin_nav.axis_param.value if origin_nav.axis_param else None
            if axis is None:
                raise EvaluationError(f"navigation {nav.rid} has no axis bound")
            ops = list(anchored.get(self.p.element_origin(e.eid), []))
            name_filter = None
            if axis is Axis.CHILD and nav.depth == 1 and ops:
                name_filter = self._literal_name_filter(ops[0])
                if name_filter is not None:
                    ops = ops[1:]
            plans.append(
                {
                    "origin": self.p.element_origin(e.eid),
                    "src": self.p.element_origin(nav.source),
                    "axis": axis,
                    "depth": nav.depth,
                    "ops": ops,
                    "name_filter": name_filter,
                }
            )
        return {"plans": plans, "entry": entry}

    def _literal_name_filter(self, op) -> Optional[str]:
        """Constant element name an equality predicate pins, if any."""
        if not isinstance(op, Comparison):
            return None
        if op.op_param is None or op.op_param.value is not CompareOp.EQUAL:
            return None
        if op.value_type is not ValueType.STRING:
            return None
        prop_side = literal_side = None
        for side in (op.left, op.right):
            if side.kind == "property":
                prop_side = side
            elif side.kind == "param":
                literal_side = side
        if prop_side is None or literal_side is None:
            return None
        prop = self.p._properties[prop_side.target]
        if prop.kind_param is None or prop.kind_param.value is not PropertyKind.NAME:
            return None
        literal = self.p._params[literal_side.target]
        if isinstance(literal, TextLiteralParam) and literal.value is not None:
            return literal.value
        return None

    def _op_elements(self, op) -> set:
        out = set()

        def visit(o):
            if isinstance(o, Match):
                out.add(self.p.element_origin(self.p._properties[o.property].owner))
                return
            for side in (o.left, o.right):
                if side.kind == "element":
                    out.add(self.p.element_origin(side.target))
                elif side.kind == "property":
                    out.add(self.p.element_origin(self.p._properties[side.target].owner))
                elif side.kind == "operator":
                    visit(self.p._operators[side.target])

        visit(op)
        return out

    # -- value access ----------------------------------------------------------

    def _prop_value(self, pid: str) -> Optional[str]:
        prop = self.p._properties[pid]
        node = self.binding[self.p.element_origin(prop.owner)]
        kind = prop.kind_param.value if prop.kind_param else None
        if kind is PropertyKind.NAME:
            return self.doc.nodes[node].name
        if kind is PropertyKind.DATA:
            return self.doc.string_value(node)
        name = prop.attribute_name.value if prop.attribute_name else None
        if not name:
            return None
        return self.doc.nodes[node].attrs.get(name)

    def _operand_value(self, side):
        if side.kind == "property":
            return self._prop_value(side.target)
        if side.kind == "element":
            return self.binding[self.p.element_origin(side.target)]
        if side.kind == "operator":
            return self._eval_operator(self.p._operators[side.target])
        return self.p._params[side.target]

    def _cast(self, raw, value_type: ValueType):
        """Comparable key for a raw string under the comparison type;
        None when the cast fails."""
        if raw is None:
            return None
        if value_type is ValueType.STRING:
            return raw
        if value_type is ValueType.NUMBER:
            try:
                return Decimal(str(raw).strip())
            except InvalidOperation:
                return None
        if value_type is ValueType.BOOLEAN:
            token = str(raw).strip().lower()
            if token in ("true", "1"):
                return 1
            if token in ("false", "0"):
                return 0
            return None
        return _temporal_key(str(raw), value_type)

    def _literal_key(self, param, value_type: ValueType):
        if isinstance(param, TextLiteralParam):
            return self._cast(param.value, value_type)
        if isinstance(param, NumberParam):
            return param.value
        if isinstance(param, BooleanParam):
            return 1 if param.value else 0
        if isinstance(param, (DateParam, TimeParam, DateTimeParam)):
            return self._cast(param.value, value_type)
        raise EvaluationError(f"parameter {param.display_name} has no comparable value")

    def _eval_comparison(self, comp: Comparison) -> bool:
        op = comp.op_param.value if comp.op_param else None
        if op is None:
            raise EvaluationError(f"comparison {comp.oid} has no operator bound")
        # element identity
        if comp.left.kind == "element" and comp.right.kind == "element":
            same = self._operand_value(comp.left) == self._operand_value(comp.right)
            return same if op is CompareOp.EQUAL else not same
        # list membership (mirrors the sequence comparison in queries)
        for side, other in ((comp.left, comp.right), (comp.right, comp.left)):
            if side.kind == "param" and isinstance(self.p._params[side.target], TextListParam):
                values = self.p._params[side.target].values or ()
                raw = self._operand_value(other)
                if isinstance(raw, bool):
                    raw = None
                member = raw is not None and str(raw) in set(values)
                return member if op is CompareOp.EQUAL else not member
        lk = self._comparable(comp.left, comp.value_type)
        rk = self._comparable(comp.right, comp.value_type)
        if lk is None or rk is None:
            return False
        try:
            return _compare(op, lk, rk)
        except TypeError:
            return False

    def _comparable(self, side, value_type: ValueType):
        if side.kind == "param":
            return self._literal_key(self.p._params[side.target], value_type)
        if side.kind == "operator":
            return 1 if self._eval_operator(self.p._operators[side.target]) else 0
        if side.kind == "element":
            raise EvaluationError("element argument in a value comparison")
        return self._cast(self._prop_value(side.target), value_type)

    def _eval_match(self, match: Match) -> bool:
        regex = match.regex_param.value if match.regex_param else None
        if regex is None:
            raise EvaluationError(f"match {match.oid} has no expression bound")
        value = self._prop_value(match.property)
        if value is None:
            return False
        return re.search(regex, value) is not None

    def _eval_operator(self, op) -> bool:
        if isinstance(op, Match):
            return self._eval_match(op)
        return self._eval_comparison(op)

    # -- binding enumeration -----------------------------------------------------

    def _candidates(self, plan) -> Iterator[int]:
        src = self.binding[plan["src"]]
        axis, depth = plan["axis"], plan["depth"]
        if axis is Axis.CHILD:
            if plan["name_filter"] is not None:
                yield from self.doc.children_named(src, plan["name_filter"])
                return
            if depth == 1:
                yield from self.doc.children(src)
                return
            layer = [src]
            for _ in range(depth):
                nxt = []
                for n in layer:
                    nxt.extend(self.doc.children(n))
                layer = nxt
            yield from layer
            return
        if axis is Axis.SELF:
            yield src
        elif axis is Axis.DESCENDANT:
            yield from self.doc.descendants(src)
        elif axis is Axis.DESCENDANT_OR_SELF:
            yield src
            yield from self.doc.descendants(src)
        else:
            yield from self.doc.following(src)

    def _extensions(self, gid: str) -> Iterator[bool]:
        """Yields once per binding tuple of the graph's new elements; the
        shared binding holds the tuple while the consumer runs."""
        info = self._graph_info[gid]
        for op in info["entry"]:
            if not self._eval_operator(op):
                return
        plans = info["plans"]

        def rec(i: int) -> Iterator[bool]:
            if i == len(plans):
                yield True
                return
            plan = plans[i]
            origin = plan["origin"]
            for node in self._candidates(plan):
                self.binding[origin] = node
                ok = True
                for op in plan["ops"]:
                    if not self._eval_operator(op):
                        ok = False
                        break
                if ok:
                    yield from rec(i + 1)
            self.binding.pop(origin, None)

        yield from rec(0)

    # -- conditions ------------------------------------------------------------

    def _eval_condition(self, cond) -> bool:
        if isinstance(cond, TrueCondition):
            return True
        if isinstance(cond, QuantifiedCondition):
            if cond.quantifier is Quantifier.EXISTS:
                for _ in self._extensions(cond.graph.gid):
                    if self._eval_condition(cond.inner):
                        self._unbind_graph(cond.graph)
                        return True
                return False
            for _ in self._extensions(cond.graph.gid):
                if not self._eval_condition(cond.inner):
                    self._unbind_graph(cond.graph)
                    return False
            return True
        if isinstance(cond, Formula):
            left = self._eval_condition(cond.left)
            right = self._eval_condition(cond.right)
            return (left and right) if cond.op.value == "and" else (left or right)
        if isinstance(cond, NotCondition):
            return not self._eval_condition(cond.inner)
        if isinstance(cond, CountCondition):
            n = self.count_pattern(cond.count_pattern)
            if isinstance(cond.argument, NumberElement):
                arg = cond.argument.value
            else:
                arg = self.count_pattern(cond.argument)
            return _compare(cond.op, n, arg)
        raise EvaluationError(f"cannot evaluate condition {type(cond).__name__}")

    def _unbind_graph(self, graph):
        for e in self.p.new_elements(graph):
            if e.subkind == XML_ELEMENT:
                self.binding.pop(self.p.element_origin(e.eid), None)

    def count_pattern(self, cp: CountPattern) -> int:
        n = 0
        for _ in self._extensions(cp.graph.gid):
            if self._eval_condition(cp.inner):
                n += 1
        return n

    # -- entry ------------------------------------------------------------------

    def run(self) -> MatchSet:
        start = time.perf_counter()
        matched: set = set()
        binding_count = 0
        g0 = self.p.graph
        for _ in self._extensions(g0.gid):
            if self._eval_condition(self.p.condition):
                binding_count += 1
                for eid in g0.return_elements:
                    matched.add(self.binding[self.p.element_origin(eid)])
        duration = time.perf_counter() - start
        return MatchSet(
            pattern=self.p.name,
            nodes=sorted(matched),
            binding_count=binding_count,
            duration_s=duration,
            document=self.doc,
        )


def evaluate(pattern: Pattern, doc: DocumentIndex) -> MatchSet:
    """Matched data regions of a concrete pattern over a document."""
    if pattern.level is not Level.CONCRETE:
        raise EvaluationError("only concrete patterns can be evaluated")
    return _Evaluator(pattern, doc).run()


def count_bindings(pattern: Pattern, count_pattern: CountPattern, outer_binding: Dict[str, int], doc: DocumentIndex) -> int:
    """Number of distinct binding tuples of a count pattern's new elements
    under a given outer binding (origin element id -> node index).
    Overlapping tuples count separately."""
    ev = _Evaluator(pattern, doc)
    for k, v in outer_binding.items():
        ev.binding[ev.p.element_origin(k)] = v
    return ev.count_pattern(count_pattern)
