"""Compilation of concrete patterns into XQuery text.

The outer graph becomes ``for`` clauses walking the navigations from the
document root; predicates and reference equalities become bracketed path
predicates; the condition tree becomes the ``where`` clause out of
``some``/``every``/``and``/``or``/``not``/``count`` expressions; the
``return`` clause lists the pattern's return elements. Paths are rooted at
the document's root element, so ``/child::*`` denotes its children.

Variable numbering is deterministic: the outer graph first, then the
condition graphs depth-first, elements in insertion order.
"""

from __future__ import annotations

import re
from typing import Optional

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


class QueryGenError(PatternError):
    """The pattern cannot be compiled to a query."""


_OP_SYMBOL = {
    CompareOp.EQUAL: "=",
    CompareOp.NOT_EQUAL: "!=",
    CompareOp.LESS: "<",
    CompareOp.LESS_EQ: "<=",
    CompareOp.GREATER: ">",
    CompareOp.GREATER_EQ: ">=",
}

_AXIS_STEP = {
    Axis.CHILD: "child::*",
    Axis.DESCENDANT: "descendant::*",
    Axis.SELF: "self::*",
    Axis.DESCENDANT_OR_SELF: "descendant-or-self::*",
    Axis.FOLLOWING: "following::*",
}

_CAST = {
    ValueType.NUMBER: "number",
    ValueType.DATE: "xs:date",
    ValueType.TIME: "xs:time",
    ValueType.DATETIME: "xs:dateTime",
    ValueType.BOOLEAN: "xs:boolean",
}


def _quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


class _Compiler:
    def __init__(self, pattern: Pattern):
        self.p = pattern
        order = pattern.element_order()
        self.var: dict = {}
        n = 0
        for eid in order:
            e = pattern._elements[eid]
            if e.subkind == XML_ROOT:
                continue
            n += 1
            self.var[eid] = f"$var{n}"
        self.order = order
        self._anchored_cache: dict = {}

    # -- structural helpers -------------------------------------------------

    def origin(self, eid: str) -> str:
        return self.p.element_origin(eid)

    def varname(self, eid: str) -> str:
        return self.var[self.origin(eid)]

    def source_ref(self, eid: str) -> str:
        """Path anchor for a navigation source: variable or the root."""
        origin = self.origin(eid)
        if self.p._elements[origin].subkind == XML_ROOT:
            return ""
        return self.var[origin]

    def new_elements(self, graph) -> list:
        """Quantified elements of a graph, navigation sources first."""
        new = [e for e in self.p.new_elements(graph) if e.subkind == XML_ELEMENT]
        placed: dict = {}
        for i, e in enumerate(new):
            placed[e.eid] = i
        incoming = {}
        for e in new:
            navs = self.p.incoming_navigations(graph, e)
            if len(navs) != 1:
                raise QueryGenError(f"element {e.eid} needs exactly one incoming navigation")
            incoming[e.eid] = navs[0]
        ordered = []
        emitted: set = set()
        pending = list(new)
        while pending:
            progressed = False
            for e in list(pending):
                src = incoming[e.eid].source
                if src in placed and src not in emitted:
                    continue
                ordered.append(e)
                emitted.add(e.eid)
                pending.remove(e)
                progressed = True
            if not progressed:
                raise QueryGenError("cyclic navigation structure")
        return ordered

    def anchored_operators(self, graph) -> dict:
        """Graph operators grouped by the element whose binding completes
        them (the argument element defined last)."""
        if graph.gid in self._anchored_cache:
            return self._anchored_cache[graph.gid]
        out: dict = {}
        pos = {eid: i for i, eid in enumerate(self.order)}
        nested = set()
        for op in graph.operators:
            if isinstance(op, Comparison):
                for side in (op.left, op.right):
                    if side.kind == "operator":
                        nested.add(side.target)
        for op in graph.operators:
            if op.oid in nested:
                continue
            elems = self._op_elements(op)
            if not elems:
                raise QueryGenError(f"operator {op.oid} references no element")
            anchor = max(elems, key=lambda eid: pos[eid])
            out.setdefault(anchor, []).append(op)
        self._anchored_cache[graph.gid] = out
        return out

    def _op_elements(self, op) -> set:
        out = set()

        def visit(o):
            if isinstance(o, Match):
                prop = self.p._properties[o.property]
                out.add(self.origin(prop.owner))
                return
            for side in (o.left, o.right):
                if side.kind == "element":
                    out.add(self.origin(side.target))
                elif side.kind == "property":
                    out.add(self.origin(self.p._properties[side.target].owner))
                elif side.kind == "operator":
                    visit(self.p._operators[side.target])

        visit(op)
        return out

    # -- rendering ------------------------------------------------------------

    def axis_steps(self, nav) -> str:
        origin = self.p._relations[self.p.relation_origin(nav.rid)]
        axis = origin.axis_param.value if origin.axis_param else None
        if axis is None:
            raise QueryGenError(f"navigation {nav.rid} has no axis bound")
        if axis is Axis.CHILD and nav.depth > 1:
            return "/".join(["child::*"] * nav.depth)
        return _AXIS_STEP[axis]

    def nav_path(self, graph, element) -> str:
        navs = self.p.incoming_navigations(graph, element)
        if len(navs) != 1:
            raise QueryGenError(f"element {element.eid} needs exactly one incoming navigation")
        nav = navs[0]
        return f"{self.source_ref(nav.source)}/{self.axis_steps(nav)}"

    def prop_access(self, pid: str, current: Optional[str]) -> str:
        prop = self.p._properties[pid]
        kind = prop.kind_param.value if prop.kind_param else None
        if kind is None:
            raise QueryGenError(f"property {pid} has no kind bound")
        owner = self.origin(prop.owner)
        base = "." if owner == current else self.var[owner]
        if kind is PropertyKind.NAME:
            return f"{base}/name()"
        if kind is PropertyKind.DATA:
            return f"{base}/data()"
        name = prop.attribute_name.value if prop.attribute_name else None
        if not name:
            raise QueryGenError(f"attribute property {pid} has no attribute name")
        return f"{base}/@{name}"

    def literal(self, param, cast: Optional[str]) -> str:
        if isinstance(param, TextLiteralParam):
            return _quote(param.value)
        if isinstance(param, TextListParam):
            return "(" + ",".join(_quote(v) for v in param.values) + ")"
        if isinstance(param, NumberParam):
            return str(param.value)
        if isinstance(param, BooleanParam):
            return "true()" if param.value else "false()"
        if isinstance(param, (DateParam, TimeParam, DateTimeParam)):
            return f'{cast}("{param.value}")' if cast else _quote(param.value)
        raise QueryGenError(f"parameter {param.display_name} cannot appear in a query")

    def operand(self, side, value_type: ValueType, current: Optional[str]) -> str:
        cast = _CAST.get(value_type)
        if side.kind == "param":
            return self.literal(self.p._params[side.target], cast)
        if side.kind == "element":
            origin = self.origin(side.target)
            return "." if origin == current else self.var[origin]
        if side.kind == "operator":
            return self.render_operator(self.p._operators[side.target], current)
        text = self.prop_access(side.target, current)
        if cast and side.kind == "property":
            return f"{cast}({text})"
        return text

    def render_comparison(self, comp: Comparison, current: Optional[str]) -> str:
        op = comp.op_param.value if comp.op_param else None
        if op is None:
            raise QueryGenError(f"comparison {comp.oid} has no operator bound")
        if comp.value_type is ValueType.UNSPECIFIED:
            raise QueryGenError(f"comparison {comp.oid} has an unspecified value type")
        if comp.left.kind == "element" and comp.right.kind == "element":
            left = self.operand(comp.left, comp.value_type, None)
            right = self.operand(comp.right, comp.value_type, current)
            expr = f"{left} is {right}"
            if op is CompareOp.EQUAL:
                return expr
            if op is CompareOp.NOT_EQUAL:
                return f"not({expr})"
            raise QueryGenError("element comparisons support equal/unequal only")
        listy = [
            s
            for s in (comp.left, comp.right)
            if s.kind == "param" and isinstance(self.p._params[s.target], TextListParam)
        ]
        if listy:
            if op not in (CompareOp.EQUAL, CompareOp.NOT_EQUAL):
                raise QueryGenError("value lists support equal/unequal only")
            left = self.operand(comp.left, comp.value_type, current)
            right = self.operand(comp.right, comp.value_type, current)
            if op is CompareOp.EQUAL:
                return f"{left}={right}"
            return f"not({left}={right})"
        left = self.operand(comp.left, comp.value_type, current)
        right = self.operand(comp.right, comp.value_type, current)
        return f"{left}{_OP_SYMBOL[op]}{right}"

    def render_match(self, match: Match, current: Optional[str]) -> str:
        regex = match.regex_param.value if match.regex_param else None
        if regex is None:
            raise QueryGenError(f"match {match.oid} has no expression bound")
        return f"matches({self.prop_access(match.property, current)},{_quote(regex)})"

    def render_operator(self, op, current: Optional[str]) -> str:
        if isinstance(op, Match):
            return self.render_match(op, current)
        return self.render_comparison(op, current)

    def predicates(self, graph, element) -> str:
        anchored = self.anchored_operators(graph).get(self.origin(element.eid), [])
        return "".join(f"[{self.render_operator(op, self.origin(element.eid))}]" for op in anchored)

    def entry_predicates(self, graph, new_origins: set) -> list:
        """Operators of a graph anchored at an element bound earlier."""
        out = []
        for anchor, ops in self.anchored_operators(graph).items():
            if anchor not in new_origins:
                out.extend(ops)
        return out

    # -- clause assembly -----------------------------------------------------

    def for_clauses(self, graph, keyword: str = "for") -> list:
        clauses = []
        new = self.new_elements(graph)
        new_origins = {self.origin(e.eid) for e in new}
        entry = self.entry_predicates(graph, new_origins)
        for i, e in enumerate(new):
            preds = self.predicates(graph, e)
            if i == 0 and entry:
                preds = "".join(f"[{self.render_operator(op, None)}]" for op in entry) + preds
            clauses.append(f"{keyword} {self.varname(e.eid)} in {self.nav_path(graph, e)}{preds}")
        return clauses

    def quantified(self, cond: QuantifiedCondition) -> str:
        kw = "some" if cond.quantifier is Quantifier.EXISTS else "every"
        clauses = self.for_clauses(cond.graph, kw)
        inner = self.condition(cond.inner)
        if not clauses:
            return inner
        return "\n satisfies ".join(clauses) + "\n satisfies " + inner

    def count_expr(self, cp: CountPattern) -> str:
        clauses = self.for_clauses(cp.graph, "for")
        returns = cp.graph.return_elements or [e.eid for e in self.new_elements(cp.graph)]
        if not returns:
            raise QueryGenError("count pattern has no elements to count")
        ret = self.varname(returns[0])
        body = "\n ".join(clauses) if clauses else ""
        inner = self.condition(cp.inner)
        parts = ["count("]
        if body:
            parts.append(" " + body + "\n")
        parts.append(f" where {inner}\n return {ret}\n)")
        return "".join(parts)

    def condition(self, cond) -> str:
        if isinstance(cond, TrueCondition):
            return "true()"
        if isinstance(cond, QuantifiedCondition):
            return self.quantified(cond)
        if isinstance(cond, Formula):
            return f"({self.condition(cond.left)}) {cond.op.value} ({self.condition(cond.right)})"
        if isinstance(cond, NotCondition):
            return f"not({self.condition(cond.inner)})"
        if isinstance(cond, CountCondition):
            left = self.count_expr(cond.count_pattern)
            if isinstance(cond.argument, NumberElement):
                right = f"{cond.argument.value}.0"
            else:
                right = self.count_expr(cond.argument)
            return f"{left} {_OP_SYMBOL[cond.op]} {right}"
        raise QueryGenError(f"cannot compile condition {type(cond).__name__}")

    def compile(self) -> str:
        g0 = self.p.graph
        lines = self.for_clauses(g0, "for")
        if not lines:
            raise QueryGenError("outer graph has no elements to iterate")
        where = self.condition(self.p.condition)
        returns = [self.varname(eid) for eid in g0.return_elements]
        ret = returns[0] if len(returns) == 1 else "(" + ",".join(returns) + ")"
        return "\n".join(lines) + f"\nwhere {where}\nreturn {ret}\n"


def generate_query(pattern: Pattern) -> str:
    """XQuery text for a concrete pattern."""
    if pattern.level is not Level.CONCRETE:
        raise QueryGenError("only concrete patterns compile to queries")
    return _Compiler(pattern).compile()


def render_comparison(pattern: Pattern, comp: Comparison, current: Optional[str] = None) -> str:
    """Predicate text of one comparison (as embedded in generated queries)."""
    return _Compiler(pattern).render_comparison(comp, current)


def normalize_query(text: str) -> str:
    """Whitespace normalization for golden comparison: collapse runs of
    spaces and newlines to single spaces; line wrapping inside bracketed
    predicates and parentheses is ignored."""
    out = re.sub(r"\s+", " ", text).strip()
    out = out.replace("( ", "(").replace(" )", ")")
    out = out.replace(" [", "[")
    return out


# ---------------------------------------------------------------------------
# grammar check: a minimal parser over the emitted query language
# ---------------------------------------------------------------------------


class GrammarError(PatternError):
    """Generated text does not parse as a query expression."""


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<var>\$[A-Za-z_][\w]*)
  | (?P<at>@[A-Za-z_][\w.-]*(?::[A-Za-z_][\w.-]*)?)
  | (?P<name>[A-Za-z_][\w-]*(?::[A-Za-z_][\w-]*)?(?:\(\))?)
  | (?P<sym><=|>=|!=|::\*|[=<>/\[\](),*.])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"for", "in", "where", "return", "some", "every", "satisfies", "and", "or"}


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise GrammarError(f"unexpected character {text[pos]!r} at offset {pos}")
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append((m.lastgroup, m.group()))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self, value=None, kind=None):
        if self.i >= len(self.tokens):
            return False
        k, v = self.tokens[self.i]
        if value is not None and v != value:
            return False
        if kind is not None and k != kind:
            return False
        return True

    def take(self, value=None, kind=None):
        if not self.peek(value, kind):
            got = self.tokens[self.i] if self.i < len(self.tokens) else ("eof", "")
            raise GrammarError(f"expected {value or kind}, got {got[1]!r} (token {self.i})")
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse_query(self):
        self.parse_flwor(top=True)
        if self.i != len(self.tokens):
            raise GrammarError(f"trailing tokens at {self.i}")

    def parse_flwor(self, top=False):
        while self.peek("for"):
            self.take("for")
            self.take(kind="var")
            self.take("in")
            self.parse_path()
        self.take("where")
        self.parse_expr()
        self.take("return")
        if self.peek("("):
            self.take("(")
            self.take(kind="var")
            while self.peek(","):
                self.take(",")
                self.take(kind="var")
            self.take(")")
        else:
            self.take(kind="var")

    def parse_expr(self):
        self.parse_and()
        while self.peek("or"):
            self.take("or")
            self.parse_and()

    def parse_and(self):
        self.parse_primary()
        while self.peek("and"):
            self.take("and")
            self.parse_primary()

    def parse_primary(self):
        if self.peek("true()") or self.peek("false()"):
            self.take()
            return
        if self.peek("not"):
            self.take("not")
            self.take("(")
            self.parse_expr()
            self.take(")")
            return
        if self.peek("some") or self.peek("every"):
            self.take()
            self.take(kind="var")
            self.take("in")
            self.parse_path()
            self.take("satisfies")
            self.parse_expr()
            return
        if self.peek("count"):
            self.parse_count_comparison()
            return
        if self.peek("("):
            save = self.i
            self.take("(")
            try:
                self.parse_expr()
                self.take(")")
                return
            except GrammarError:
                self.i = save
        self.parse_comparison()

    def parse_count_comparison(self):
        self.parse_count()
        self.take(kind="sym")
        if self.peek(kind="number"):
            self.take(kind="number")
        else:
            self.parse_count()

    def parse_count(self):
        self.take("count")
        self.take("(")
        self.parse_flwor()
        self.take(")")

    def parse_comparison(self):
        self.parse_value()
        if self.peek("is"):
            self.take("is")
            self.parse_value()
            return
        self.take(kind="sym")
        self.parse_value()

    def parse_value(self):
        if self.peek(kind="string") or self.peek(kind="number"):
            self.take()
            return
        if self.peek("true()") or self.peek("false()"):
            self.take()
            return
        if self.peek("matches"):
            self.take("matches")
            self.take("(")
            self.parse_value()
            self.take(",")
            self.take(kind="string")
            self.take(")")
            return
        if self.peek("not"):
            self.take("not")
            self.take("(")
            self.parse_comparison_or_is()
            self.take(")")
            return
        if self.peek(kind="name"):
            # cast constructors: number(...), xs:date("...")
            name = self.take(kind="name")
            self.take("(")
            if self.peek(kind="string"):
                self.take(kind="string")
            else:
                self.parse_value()
            self.take(")")
            return
        if self.peek("("):
            self.take("(")
            self.parse_value()
            while self.peek(","):
                self.take(",")
                self.parse_value()
            self.take(")")
            return
        self.parse_path_value()

    def parse_comparison_or_is(self):
        self.parse_value()
        if self.peek("is"):
            self.take("is")
            self.parse_value()
            return
        self.take(kind="sym")
        self.parse_value()

    def parse_path_value(self):
        if self.peek(kind="var"):
            self.take(kind="var")
        elif self.peek("."):
            self.take(".")
        else:
            got = self.tokens[self.i] if self.i < len(self.tokens) else ("eof", "")
            raise GrammarError(f"unexpected value token {got[1]!r}")
        while self.peek("/"):
            self.take("/")
            if self.peek(kind="at"):
                self.take(kind="at")
            elif self.peek("name()") or self.peek("data()"):
                self.take()
            else:
                self.take(kind="name")

    def parse_path(self):
        if self.peek(kind="var"):
            self.take(kind="var")
        self.take("/")
        self.parse_steps()

    def parse_steps(self):
        while True:
            self.take(kind="name")  # axis name
            self.take("::*")
            while self.peek("["):
                self.take("[")
                self.parse_expr_or_predicate()
                self.take("]")
            if self.peek("/"):
                self.take("/")
                continue
            break

    def parse_expr_or_predicate(self):
        save = self.i
        try:
            self.parse_comparison_or_is()
            return
        except GrammarError:
            self.i = save
        self.parse_expr()


def check_grammar(text: str):
    """Parse generated query text; raises GrammarError when it does not
    conform to the emitted query language."""
    tokens = _tokenize(text)
    _Parser(tokens).parse_query()
