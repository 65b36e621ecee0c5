"""Well-formedness constraints over patterns.

Every constraint is individually addressable through a stable id
(``PS-*`` logical structure, ``GS-*`` graph structure, ``OP-*`` operators,
``PAR-*`` parameters, ``AX-*`` XML adaption). ``validate`` runs the whole
registry against a pattern for a given abstraction level and returns the
violations as data; it never raises for an invalid pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .model import (
    ALL_COMPARE_OPS,
    Axis,
    BooleanParam,
    Comparison,
    CompareOp,
    CountCondition,
    CountPattern,
    DateParam,
    DateTimeParam,
    Formula,
    GENERIC,
    Level,
    Match,
    NotCondition,
    NumberParam,
    OptionParam,
    Parameter,
    Pattern,
    PropertyKind,
    PropertyOptionParam,
    QuantifiedCondition,
    RelationOptionParam,
    TextListParam,
    TextLiteralParam,
    TimeParam,
    TrueCondition,
    UnknownParameterValue,
    ValueType,
    XML_ELEMENT,
    XML_NAVIGATION,
    XML_PROPERTY,
    XML_REFERENCE,
    XML_ROOT,
)

ALL_LEVELS = frozenset(Level)
XML_LEVELS = frozenset({Level.ABSTRACT_XML, Level.CONCRETE})
CONCRETE_ONLY = frozenset({Level.CONCRETE})
GENERIC_ONLY = frozenset({Level.GENERIC})


@dataclass
class Violation:
    constraint_id: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.constraint_id} {self.location} {self.message}"


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _morphism_sites(pattern: Pattern):
    """(owner-kind, owner, enclosing graph) for every morphism container,
    in condition-traversal order."""
    sites = []

    def walk(cond, enclosing):
        if isinstance(cond, QuantifiedCondition):
            sites.append(("quantified", cond, enclosing))
            walk(cond.inner, cond.graph)
        elif isinstance(cond, Formula):
            walk(cond.left, enclosing)
            walk(cond.right, enclosing)
        elif isinstance(cond, NotCondition):
            walk(cond.inner, enclosing)
        elif isinstance(cond, CountCondition):
            sites.append(("count", cond.count_pattern, enclosing))
            walk(cond.count_pattern.inner, cond.count_pattern.graph)
            if isinstance(cond.argument, CountPattern):
                sites.append(("count", cond.argument, enclosing))
                walk(cond.argument.inner, cond.argument.graph)

    walk(pattern.condition, pattern.graph)
    return sites


def _pattern_scopes(pattern: Pattern):
    """Graph groups whose return elements must stay equivalent.

    The outer pattern and each count pattern form separate scopes; a scope
    holds its own graph plus the graphs of quantified conditions nested
    under it (not descending into inner count patterns).
    """
    scopes = []

    def collect(root_graph, cond):
        scope = [root_graph]

        def walk(c):
            if isinstance(c, QuantifiedCondition):
                scope.append(c.graph)
                walk(c.inner)
            elif isinstance(c, Formula):
                walk(c.left)
                walk(c.right)
            elif isinstance(c, NotCondition):
                walk(c.inner)
            elif isinstance(c, CountCondition):
                collect(c.count_pattern.graph, c.count_pattern.inner)
                if isinstance(c.argument, CountPattern):
                    collect(c.argument.graph, c.argument.inner)

        walk(cond)
        scopes.append(scope)

    collect(pattern.graph, pattern.condition)
    return scopes


def _operand_elements(pattern: Pattern, op) -> set:
    """Origin element ids serving an operator directly or indirectly."""
    out = set()

    def visit(o):
        if isinstance(o, Match):
            prop = pattern._properties.get(o.property)
            if prop is not None:
                out.add(pattern.element_origin(prop.owner))
            return
        for side in (o.left, o.right):
            if side.kind == "element" and side.target in pattern._elements:
                out.add(pattern.element_origin(side.target))
            elif side.kind == "property" and side.target in pattern._properties:
                out.add(pattern.element_origin(pattern._properties[side.target].owner))
            elif side.kind == "operator" and side.target in pattern._operators:
                visit(pattern._operators[side.target])

    visit(op)
    return out


_LITERAL_TYPES = {
    TextLiteralParam: ValueType.STRING,
    TextListParam: ValueType.STRING,
    NumberParam: ValueType.NUMBER,
    BooleanParam: ValueType.BOOLEAN,
    DateParam: ValueType.DATE,
    TimeParam: ValueType.TIME,
    DateTimeParam: ValueType.DATETIME,
}


# ---------------------------------------------------------------------------
# constraint checks (each returns a list of violations)
# ---------------------------------------------------------------------------


def _ps01(p: Pattern, level):
    out = []
    for kind, site, enclosing in _morphism_sites(p):
        m = site.morphism
        if m is None:
            out.append(Violation("PS-01", site.graph.gid if site.graph else "?", "missing morphism"))
            continue
        if m.source_graph != enclosing.gid:
            out.append(Violation("PS-01", m.target_graph, f"morphism source {m.source_graph} is not the preceding graph {enclosing.gid}"))
        if site.graph is None or m.target_graph != site.graph.gid:
            out.append(Violation("PS-01", m.target_graph, "morphism target is not its own graph"))
    return out


def _ps02(p: Pattern, level):
    out = []
    for _, site, _ in _morphism_sites(p):
        m = site.morphism
        if m is None:
            continue
        src = p._graphs.get(m.source_graph)
        tgt = p._graphs.get(m.target_graph)
        src_e = {e.eid for e in src.elements} if src else set()
        tgt_e = {e.eid for e in tgt.elements} if tgt else set()
        src_r = {r.rid for r in src.relations} if src else set()
        tgt_r = {r.rid for r in tgt.relations} if tgt else set()
        for s, t in m.element_mappings:
            if s not in src_e or t not in tgt_e:
                out.append(Violation("PS-02", m.target_graph, f"element mapping {s}->{t} endpoints outside morphism graphs"))
        for s, t in m.relation_mappings:
            if s not in src_r or t not in tgt_r:
                out.append(Violation("PS-02", m.target_graph, f"relation mapping {s}->{t} endpoints outside morphism graphs"))
    return out


def _ps03(p: Pattern, level):
    out = []
    for _, site, _ in _morphism_sites(p):
        m = site.morphism
        if m is None:
            continue
        for label, pairs in (("element", m.element_mappings), ("relation", m.relation_mappings)):
            seen = set()
            for s, _t in pairs:
                if s in seen:
                    out.append(Violation("PS-03", m.target_graph, f"two {label} mappings share the source {s}"))
                seen.add(s)
    return out


def _gs01(p: Pattern, level):
    return [
        Violation("GS-01", g.gid, "graph has no return elements")
        for g in p.graphs()
        if not g.return_elements
    ]


def _gs02(p: Pattern, level):
    out = []
    for g in p.graphs():
        members = {e.eid for e in g.elements}
        for eid in g.return_elements:
            if eid not in members:
                out.append(Violation("GS-02", g.gid, f"return element {eid} is not a member of the graph"))
    return out


def _gs03(p: Pattern, level):
    out = []
    for scope in _pattern_scopes(p):
        base = scope[0]
        base_set = {p.element_origin(e) for e in base.return_elements}
        for g in scope[1:]:
            got = {p.element_origin(e) for e in g.return_elements}
            if got != base_set:
                out.append(Violation("GS-03", g.gid, "return elements are not equivalent to the enclosing pattern's"))
    return out


def _gs04(p: Pattern, level):
    if level is not Level.GENERIC:
        return []
    out = []
    for g in p.graphs():
        for e in g.elements:
            if e.subkind != GENERIC:
                out.append(Violation("GS-04", f"{g.gid}/{e.eid}", "generic pattern contains an XML-adapted element"))
            for prop in e.properties:
                if prop.subkind != GENERIC:
                    out.append(Violation("GS-04", f"{g.gid}/{prop.pid}", "generic pattern contains an XML-adapted property"))
        for r in g.relations:
            if r.subkind != GENERIC:
                out.append(Violation("GS-04", f"{g.gid}/{r.rid}", "generic pattern contains an XML-adapted relation"))
    return out


def _gs05(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        roots = [e for e in g.elements if e.subkind == XML_ROOT]
        if len(roots) != 1:
            out.append(Violation("GS-05", g.gid, f"graph must contain exactly one document root, found {len(roots)}"))
    return out


def _gs06(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        for e in g.elements:
            if e.subkind == GENERIC:
                out.append(Violation("GS-06", f"{g.gid}/{e.eid}", "XML-adapted pattern contains a generic element"))
            for prop in e.properties:
                if prop.subkind == GENERIC:
                    out.append(Violation("GS-06", f"{g.gid}/{prop.pid}", "XML-adapted pattern contains a generic property"))
        for r in g.relations:
            if r.subkind == GENERIC:
                out.append(Violation("GS-06", f"{g.gid}/{r.rid}", "XML-adapted pattern contains a generic relation"))
    return out


def _gs07(p: Pattern, level):
    out = []
    targets_e = set()
    targets_r = set()
    for _, site, _ in _morphism_sites(p):
        if site.morphism is None:
            continue
        targets_e.update(t for _, t in site.morphism.element_mappings)
        targets_r.update(t for _, t in site.morphism.relation_mappings)
    g0 = p.graph
    for e in g0.elements:
        if e.eid in targets_e:
            out.append(Violation("GS-07", f"{g0.gid}/{e.eid}", "outer-graph element is the target of a mapping"))
    for r in g0.relations:
        if r.rid in targets_r:
            out.append(Violation("GS-07", f"{g0.gid}/{r.rid}", "outer-graph relation is the target of a mapping"))
    return out


def _gs08(p: Pattern, level):
    out = []
    for _, site, _ in _morphism_sites(p):
        m = site.morphism
        if m is None:
            continue
        emap = dict(m.element_mappings)
        for s, t in m.relation_mappings:
            rs = p._relations.get(s)
            rt = p._relations.get(t)
            if rs is None or rt is None:
                continue
            if emap.get(rs.source) != rt.source or emap.get(rs.target) != rt.target:
                out.append(Violation("GS-08", m.target_graph, f"relation mapping {s}->{t} lacks matching element mappings for its endpoints"))
    return out


def _gs09(p: Pattern, level):
    out = []
    for g in p.graphs():
        members = {e.eid for e in g.elements}
        for r in g.relations:
            if r.source not in members or r.target not in members:
                out.append(Violation("GS-09", f"{g.gid}/{r.rid}", "relation endpoint outside its graph"))
    return out


def _gs10(p: Pattern, level):
    out = []
    seen = {}
    for g in p.graphs():
        for e in g.elements:
            for prop in e.properties:
                if prop.owner != e.eid:
                    out.append(Violation("GS-10", f"{g.gid}/{prop.pid}", "property owner does not match its element"))
                if prop.pid in seen:
                    out.append(Violation("GS-10", f"{g.gid}/{prop.pid}", "property attached to more than one element"))
                seen[prop.pid] = e.eid
    return out


def _op01(p: Pattern, level):
    out = []
    for g in p.graphs():
        members_e = {e.eid for e in g.elements}
        members_p = {prop.pid for e in g.elements for prop in e.properties}
        members_o = {o.oid for o in g.operators}
        for o in g.operators:
            if isinstance(o, Match):
                if o.property not in members_p:
                    out.append(Violation("OP-01", f"{g.gid}/{o.oid}", "match property outside the operator's graph"))
                continue
            for side in (o.left, o.right):
                if side.kind == "element" and side.target not in members_e:
                    out.append(Violation("OP-01", f"{g.gid}/{o.oid}", f"element argument {side.target} outside the operator's graph"))
                elif side.kind == "property" and side.target not in members_p:
                    out.append(Violation("OP-01", f"{g.gid}/{o.oid}", f"property argument {side.target} outside the operator's graph"))
                elif side.kind == "operator" and side.target not in members_o:
                    out.append(Violation("OP-01", f"{g.gid}/{o.oid}", f"operator argument {side.target} outside the operator's graph"))
    return out


def _op02(p: Pattern, level):
    out = []
    for g in p.graphs():
        for o in g.operators:
            if not isinstance(o, Comparison):
                continue
            if level is Level.CONCRETE and o.value_type is ValueType.UNSPECIFIED:
                out.append(Violation("OP-02", f"{g.gid}/{o.oid}", "comparison type unspecified in a concrete pattern"))
            for side in (o.left, o.right):
                if side.kind == "param":
                    param = p._params.get(side.target)
                    if isinstance(param, UnknownParameterValue):
                        continue
                    expected = _LITERAL_TYPES.get(type(param))
                    if expected is not None and o.value_type not in (ValueType.UNSPECIFIED, expected):
                        out.append(Violation("OP-02", f"{g.gid}/{o.oid}", f"literal argument type {expected.value} disagrees with comparison type {o.value_type.value}"))
                elif side.kind == "operator" and o.value_type not in (ValueType.UNSPECIFIED, ValueType.BOOLEAN):
                    out.append(Violation("OP-02", f"{g.gid}/{o.oid}", "operator argument requires a boolean comparison type"))
    return out


def _op03(p: Pattern, level):
    out = []
    allowed = {CompareOp.EQUAL, CompareOp.NOT_EQUAL}
    for g in p.graphs():
        for o in g.operators:
            if isinstance(o, Comparison) and o.left.kind == "element" and o.right.kind == "element":
                opts = set(o.op_param.options) if o.op_param else set()
                if not opts or not opts.issubset(allowed):
                    out.append(Violation("OP-03", f"{g.gid}/{o.oid}", "element comparison allows operators other than equal/unequal"))
    return out


def _op04(p: Pattern, level):
    out = []
    for g in p.graphs():
        state: dict = {}

        def visit(oid, gid=g.gid):
            if state.get(oid) == 1:
                out.append(Violation("OP-04", f"{gid}/{oid}", "cyclic operator argument reference"))
                return
            if state.get(oid) == 2:
                return
            state[oid] = 1
            op = p._operators.get(oid)
            if isinstance(op, Comparison):
                for side in (op.left, op.right):
                    if side.kind == "operator" and side.target in p._operators:
                        visit(side.target)
            state[oid] = 2

        for o in g.operators:
            visit(o.oid)
    return out


def _op05(p: Pattern, level):
    out = []
    for g in p.graphs():
        listed = {o.oid for o in g.operators}
        for o in g.operators:
            if isinstance(o, Comparison):
                for side in (o.left, o.right):
                    if side.kind == "operator" and side.target not in listed:
                        out.append(Violation("OP-05", f"{g.gid}/{o.oid}", f"referenced operator {side.target} missing from the graph's operator list"))
            if not _operand_elements(p, o):
                out.append(Violation("OP-05", f"{g.gid}/{o.oid}", "operator references no component of its graph"))
    return out


def _attribute_name_required(p: Pattern, param: Parameter) -> bool:
    """An attribute-name parameter is needed only when some owning property
    has (or can only have) the attribute kind selected."""
    for prop in p._properties.values():
        if prop.attribute_name is param:
            kp = prop.kind_param
            if kp is not None and kp.value is PropertyKind.ATTRIBUTE:
                return True
    return False


def _is_attr_name_param(p: Pattern, param: Parameter) -> bool:
    return any(prop.attribute_name is param for prop in p._properties.values())


def _par01(p: Pattern, level):
    reachable = {x.pid for x in p.referenced_params()}
    listed = {x.pid for x in p.parameter_list}
    out = []
    for pid in sorted(reachable - listed):
        out.append(Violation("PAR-01", f"param:{pid}", "referenced parameter missing from the parameter list"))
    for pid in sorted(listed - reachable):
        out.append(Violation("PAR-01", f"param:{pid}", "listed parameter is referenced nowhere in the pattern"))
    return out


def _par02(p: Pattern, level):
    if level is not Level.CONCRETE:
        return []
    out = []
    for param in p.parameter_list:
        if isinstance(param, (OptionParam, UnknownParameterValue)):
            continue
        if param.is_set():
            continue
        if _is_attr_name_param(p, param) and not _attribute_name_required(p, param):
            continue
        out.append(Violation("PAR-02", f"param:{param.display_name}", "parameter value unset in a concrete pattern"))
    return out


def _par03(p: Pattern, level):
    if level is not Level.CONCRETE:
        return []
    return [
        Violation("PAR-03", f"param:{param.display_name}", "concrete pattern contains an unknown parameter placeholder")
        for param in p.parameter_list
        if isinstance(param, UnknownParameterValue)
    ]


def _par04(p: Pattern, level):
    out = []
    for param in p.parameter_list:
        if not isinstance(param, OptionParam):
            continue
        if not param.options:
            out.append(Violation("PAR-04", f"param:{param.display_name}", "option parameter offers no options"))
            continue
        if param.value is not None and param.value not in param.options:
            out.append(Violation("PAR-04", f"param:{param.display_name}", "chosen value is not among the options"))
        if level is Level.CONCRETE and param.value is None:
            out.append(Violation("PAR-04", f"param:{param.display_name}", "option parameter unset in a concrete pattern"))
    return out


def _par05(p: Pattern, level):
    out = []
    for param in p.parameter_list:
        if isinstance(param, (DateParam, TimeParam, DateTimeParam)) and param.value is not None:
            if not param.lexical_re.match(param.value):
                out.append(Violation("PAR-05", f"param:{param.display_name}", f"value {param.value!r} violates the lexical form"))
    return out


def _ax01(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        for e in g.elements:
            if e.subkind != XML_ELEMENT:
                continue
            incoming = [r for r in g.relations if r.target == e.eid and r.subkind == XML_NAVIGATION]
            if len(incoming) != 1:
                out.append(Violation("AX-01", f"{g.gid}/{e.eid}", f"XML element has {len(incoming)} incoming navigations, needs exactly one"))
    return out


def _ax02(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        for e in g.elements:
            if e.subkind != XML_ROOT:
                continue
            for r in g.relations:
                if r.target == e.eid:
                    out.append(Violation("AX-02", f"{g.gid}/{e.eid}", "document root has an incoming relation"))
    return out


def _ax03(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        roots = {e.eid for e in g.elements if e.subkind == XML_ROOT}
        for r in g.relations:
            if r.subkind == XML_REFERENCE and r.source in roots:
                out.append(Violation("AX-03", f"{g.gid}/{r.rid}", "document root has an outgoing reference"))
    return out


def _ax04(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    roots = {e.eid for g in p.graphs() for e in g.elements if e.subkind == XML_ROOT}
    for g in p.graphs():
        for e in g.elements:
            if e.subkind == XML_ROOT and e.properties:
                out.append(Violation("AX-04", f"{g.gid}/{e.eid}", "document root carries properties"))
        for o in g.operators:
            if isinstance(o, Comparison):
                for side in (o.left, o.right):
                    if side.kind == "element" and side.target in roots:
                        out.append(Violation("AX-04", f"{g.gid}/{o.oid}", "document root used as an operator argument"))
    return out


def _ax05(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    mapped = set()
    for _, site, _ in _morphism_sites(p):
        if site.morphism is not None:
            mapped.update(t for _, t in site.morphism.relation_mappings)
    out = []
    for g in p.graphs():
        for r in g.relations:
            if r.subkind != XML_NAVIGATION:
                continue
            if (r.axis_param is None) != (r.rid in mapped):
                who = "mapped" if r.rid in mapped else "unmapped"
                out.append(Violation("AX-05", f"{g.gid}/{r.rid}", f"{who} navigation axis parameter presence is wrong"))
    return out


def _ax06(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for _, site, _ in _morphism_sites(p):
        m = site.morphism
        if m is None:
            continue
        for s, t in m.relation_mappings:
            rs, rt = p._relations.get(s), p._relations.get(t)
            if rs is None or rt is None:
                continue
            if rs.subkind != rt.subkind:
                out.append(Violation("AX-06", m.target_graph, f"relation mapping {s}->{t} mixes navigation and reference"))
    return out


def _ax07(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        for r in g.relations:
            if r.subkind != XML_REFERENCE:
                continue
            src = p._elements.get(r.source)
            tgt = p._elements.get(r.target)
            src_props = {prop.pid for prop in src.properties} if src else set()
            tgt_props = {prop.pid for prop in tgt.properties} if tgt else set()
            if r.source_property not in src_props:
                out.append(Violation("AX-07", f"{g.gid}/{r.rid}", "reference source property not contained in the source element"))
            if r.target_property not in tgt_props:
                out.append(Violation("AX-07", f"{g.gid}/{r.rid}", "reference target property not contained in the target element"))
    return out


def _ax08(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        for e in g.elements:
            for prop in e.properties:
                if prop.subkind != XML_PROPERTY or prop.kind_param is None:
                    continue
                if prop.kind_param.value is PropertyKind.ATTRIBUTE:
                    if prop.attribute_name is None:
                        out.append(Violation("AX-08", f"{g.gid}/{prop.pid}", "attribute property lacks an attribute-name parameter"))
                    elif level is Level.CONCRETE and not prop.attribute_name.value:
                        out.append(Violation("AX-08", f"{g.gid}/{prop.pid}", "attribute name must be a non-empty string in a concrete pattern"))
    return out


def _ax09(p: Pattern, level):
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        for r in g.relations:
            if r.subkind != XML_NAVIGATION:
                continue
            if r.depth < 1:
                out.append(Violation("AX-09", f"{g.gid}/{r.rid}", "navigation depth below one"))
                continue
            if r.depth > 1:
                origin = p._relations.get(p.relation_origin(r.rid))
                axis = origin.axis_param.value if origin is not None and origin.axis_param else None
                if axis is not None and axis is not Axis.CHILD:
                    out.append(Violation("AX-09", f"{g.gid}/{r.rid}", "depth beyond one requires the child axis"))
    return out


def _ax10(p: Pattern, level):
    """Property kind parameter presence mirrors the adaption contract."""
    if level not in XML_LEVELS:
        return []
    out = []
    for g in p.graphs():
        for e in g.elements:
            for prop in e.properties:
                if prop.subkind == XML_PROPERTY and prop.kind_param is None:
                    out.append(Violation("AX-10", f"{g.gid}/{prop.pid}", "XML property lacks its kind parameter"))
    return out


@dataclass
class Constraint:
    cid: str
    description: str
    levels: frozenset
    check: Callable


CONSTRAINTS = [
    Constraint("PS-01", "morphisms link the preceding graph to their own graph", ALL_LEVELS, _ps01),
    Constraint("PS-02", "mapping endpoints lie in the morphism's graphs", ALL_LEVELS, _ps02),
    Constraint("PS-03", "mappings of one morphism have distinct sources", ALL_LEVELS, _ps03),
    Constraint("GS-01", "every graph has return elements", ALL_LEVELS, _gs01),
    Constraint("GS-02", "return elements belong to their graph", ALL_LEVELS, _gs02),
    Constraint("GS-03", "return elements agree across a pattern's graphs", ALL_LEVELS, _gs03),
    Constraint("GS-04", "generic patterns contain no XML-adapted items", GENERIC_ONLY, _gs04),
    Constraint("GS-05", "XML graphs contain exactly one document root", XML_LEVELS, _gs05),
    Constraint("GS-06", "XML patterns contain no generic items", XML_LEVELS, _gs06),
    Constraint("GS-07", "outer-graph items are never mapping targets", ALL_LEVELS, _gs07),
    Constraint("GS-08", "relation mappings come with endpoint element mappings", ALL_LEVELS, _gs08),
    Constraint("GS-09", "relation endpoints belong to the relation's graph", ALL_LEVELS, _gs09),
    Constraint("GS-10", "properties belong to exactly one element", ALL_LEVELS, _gs10),
    Constraint("OP-01", "operator arguments are components of the owner graph", ALL_LEVELS, _op01),
    Constraint("OP-02", "argument types agree with the comparison type", ALL_LEVELS, _op02),
    Constraint("OP-03", "element comparisons use equal/unequal only", ALL_LEVELS, _op03),
    Constraint("OP-04", "operator argument references are acyclic", ALL_LEVELS, _op04),
    Constraint("OP-05", "operator lists are closed under reference", ALL_LEVELS, _op05),
    Constraint("PAR-01", "parameter list equals the referenced parameters", ALL_LEVELS, _par01),
    Constraint("PAR-02", "concrete values are all specified", CONCRETE_ONLY, _par02),
    Constraint("PAR-03", "no unknown placeholders remain in concrete patterns", CONCRETE_ONLY, _par03),
    Constraint("PAR-04", "option parameters offer options and pick one of them", ALL_LEVELS, _par04),
    Constraint("PAR-05", "date/time values satisfy their lexical forms", ALL_LEVELS, _par05),
    Constraint("AX-01", "XML elements have exactly one incoming navigation", XML_LEVELS, _ax01),
    Constraint("AX-02", "document roots have no incoming relations", XML_LEVELS, _ax02),
    Constraint("AX-03", "document roots have no outgoing references", XML_LEVELS, _ax03),
    Constraint("AX-04", "document roots carry no predicates", XML_LEVELS, _ax04),
    Constraint("AX-05", "navigation axis parameters exist exactly when unmapped", XML_LEVELS, _ax05),
    Constraint("AX-06", "mappings preserve the relation subkind", XML_LEVELS, _ax06),
    Constraint("AX-07", "reference properties sit on the reference endpoints", XML_LEVELS, _ax07),
    Constraint("AX-08", "attribute properties carry a usable attribute name", XML_LEVELS, _ax08),
    Constraint("AX-09", "navigation depth is positive and child-only beyond one", XML_LEVELS, _ax09),
    Constraint("AX-10", "XML properties carry their kind parameter", XML_LEVELS, _ax10),
]

CONSTRAINT_IDS = tuple(c.cid for c in CONSTRAINTS)


def validate(pattern: Pattern, level: Optional[Level] = None) -> list:
    """All constraint violations of ``pattern`` at ``level``.

    Pure and deterministic; the empty list means the pattern is well
    formed at that abstraction level.
    """
    level = level or pattern.level
    out = []
    for c in CONSTRAINTS:
        if level in c.levels:
            out.extend(c.check(pattern, level))
    return out


def is_valid(pattern: Pattern, level: Optional[Level] = None) -> bool:
    return not validate(pattern, level)
