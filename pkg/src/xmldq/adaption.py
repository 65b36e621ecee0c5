"""Transformation of generic patterns into XML-adapted abstract patterns.

The adaption (1) turns elements and properties into their XML subkinds,
(2) replaces each relation by an axis navigation or an id reference as
decided per relation, (3) inserts a document root into every graph and
(4) completes the tree by navigating to every element that has no other
incoming navigation. Mapped copies inherit the decision of their origin
and share its parameters.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Union

from .model import (
    ALL_AXES,
    ALL_PROPERTY_KINDS,
    Axis,
    BuildError,
    CompareOp,
    GENERIC,
    Level,
    Pattern,
    PatternError,
    Property,
    PropertyKind,
    PropertyOptionParam,
    Relation,
    RelationOptionParam,
    TextLiteralParam,
    ValueType,
    XML_ELEMENT,
    XML_NAVIGATION,
    XML_PROPERTY,
    XML_REFERENCE,
    XML_ROOT,
)
from .validation import validate


class AdaptionError(PatternError):
    """The generic pattern or the decision set cannot be adapted."""


@dataclass
class NavigationDecision:
    """Turn a relation into an axis navigation.

    ``axis`` presets a default that stays rebindable; ``axes`` restricts
    the selectable options.
    """

    axes: tuple = ALL_AXES
    axis: Optional[Axis] = None
    depth: int = 1


@dataclass
class ReferenceDecision:
    """Turn a relation into an id reference (value equality of the two
    auto-inserted properties)."""

    kinds: tuple = ALL_PROPERTY_KINDS


Decision = Union[NavigationDecision, ReferenceDecision]


def unmapped_relations(pattern: Pattern) -> list:
    """Relations requiring an adaption decision (mapped copies inherit)."""
    return [r for g in pattern.graphs() for r in g.relations if r.rid not in pattern._rel_src]


def adapt_to_xml(
    generic: Pattern,
    decisions: Dict[str, Decision],
    root_axis: Axis = Axis.CHILD,
    property_kinds: Optional[Dict[str, Iterable[PropertyKind]]] = None,
) -> Pattern:
    """XML-adapted abstract pattern for a well-formed generic pattern.

    ``decisions`` maps ids of unmapped relations to their decision;
    ``property_kinds`` optionally restricts the kind options of individual
    properties (by id of the property that introduced them). The input is
    left untouched; the result validates at the abstract XML level.
    """
    violations = validate(generic, Level.GENERIC)
    if violations:
        raise AdaptionError("generic pattern is not well-formed: " + "; ".join(map(str, violations)))
    needed = {r.rid for r in unmapped_relations(generic)}
    missing = needed - set(decisions)
    if missing:
        raise AdaptionError(f"missing decisions for relations: {sorted(missing)}")
    unknown = set(decisions) - needed
    if unknown:
        raise AdaptionError(f"decisions given for unknown or mapped relations: {sorted(unknown)}")

    p = copy.deepcopy(generic)
    p.level = Level.ABSTRACT_XML
    property_kinds = property_kinds or {}

    graphs = p.graphs()
    morphism_of = _morphism_by_graph(p)

    # 1. subkind replacement: elements and properties
    for g in graphs:
        for e in g.elements:
            e.subkind = XML_ELEMENT
            e.name = None
    for g in graphs:
        for e in g.elements:
            for prop in e.properties:
                prop.subkind = XML_PROPERTY
                origin_pid = p.property_origin(prop.pid)
                if origin_pid == prop.pid:
                    kinds = tuple(property_kinds.get(prop.pid, ALL_PROPERTY_KINDS))
                    kp = PropertyOptionParam(
                        pid=p._new_id("par"),
                        options=kinds,
                        value=kinds[0] if len(kinds) == 1 else None,
                    )
                    p._register_param(kp)
                    prop.kind_param = kp
                    if PropertyKind.ATTRIBUTE in kinds:
                        an = TextLiteralParam(pid=p._new_id("par"))
                        p._register_param(an)
                        prop.attribute_name = an
                else:
                    origin = p.prop(origin_pid)
                    prop.kind_param = origin.kind_param
                    prop.attribute_name = origin.attribute_name

    # 2. relation replacement per decision; copies mirror their origin
    dropped: set = set()
    for g in graphs:
        for r in list(g.relations):
            origin_rid = p.relation_origin(r.rid)
            if origin_rid in dropped:
                _drop_relation(p, g, r, morphism_of.get(g.gid))
                continue
            decision = decisions.get(origin_rid)
            if r.rid == origin_rid:
                if isinstance(decision, NavigationDecision):
                    if r.source == r.target:
                        # identity of an element with itself is vacuous
                        dropped.add(r.rid)
                        _drop_relation(p, g, r, morphism_of.get(g.gid))
                        continue
                    _make_navigation(p, r, decision)
                else:
                    _make_reference(p, g, r, decision)
            else:
                origin = p.relation(origin_rid)
                if origin.subkind == XML_NAVIGATION:
                    r.subkind = XML_NAVIGATION
                    r.axis_param = None
                    r.depth = origin.depth
                else:
                    _mirror_reference(p, g, r, origin)

    # 3 + 4. root insertion and tree completion, graph by graph
    roots: dict = {}
    completion_nav: dict = {}  # (graph id, origin element id) -> inserted navigation
    for g in graphs:
        root = p.add_xml_root(g)
        m = morphism_of.get(g.gid)
        if m is not None:
            prev_root = roots[m.source_graph]
            m.element_mappings.append((prev_root.eid, root.eid))
            p._elem_src[root.eid] = prev_root.eid
        roots[g.gid] = root
        for e in list(g.elements):
            if e.subkind != XML_ELEMENT:
                continue
            if p.incoming_navigations(g, e):
                continue
            origin_eid = p.element_origin(e.eid)
            prev_nav = completion_nav.get((m.source_graph, origin_eid)) if m is not None else None
            nav = Relation(
                rid=p._new_id("r"),
                source=root.eid,
                target=e.eid,
                subkind=XML_NAVIGATION,
            )
            if prev_nav is None:
                param = RelationOptionParam(
                    pid=p._new_id("par"), options=ALL_AXES, value=root_axis, preset=True
                )
                p._register_param(param)
                nav.axis_param = param
            else:
                nav.depth = prev_nav.depth
                m.relation_mappings.append((prev_nav.rid, nav.rid))
                p._rel_src[nav.rid] = prev_nav.rid
            completion_nav[(g.gid, origin_eid)] = nav
            g.relations.append(nav)
            p._relations[nav.rid] = nav

    p.assert_parameter_closure()
    violations = validate(p, Level.ABSTRACT_XML)
    if violations:
        raise AdaptionError("adaption produced an invalid pattern: " + "; ".join(map(str, violations)))
    return p


def _morphism_by_graph(p: Pattern) -> dict:
    out = {}

    def walk(cond):
        from .model import CountCondition, Formula, NotCondition, QuantifiedCondition

        if isinstance(cond, QuantifiedCondition):
            out[cond.graph.gid] = cond.morphism
            walk(cond.inner)
        elif isinstance(cond, Formula):
            walk(cond.left)
            walk(cond.right)
        elif isinstance(cond, NotCondition):
            walk(cond.inner)
        elif isinstance(cond, CountCondition):
            out[cond.count_pattern.graph.gid] = cond.count_pattern.morphism
            walk(cond.count_pattern.inner)
            from .model import CountPattern

            if isinstance(cond.argument, CountPattern):
                out[cond.argument.graph.gid] = cond.argument.morphism
                walk(cond.argument.inner)

    walk(p.condition)
    return out


def _drop_relation(p: Pattern, g, r, morphism):
    g.relations.remove(r)
    del p._relations[r.rid]
    p._rel_src.pop(r.rid, None)
    if morphism is not None:
        morphism.relation_mappings = [(s, t) for s, t in morphism.relation_mappings if t != r.rid]


def _make_navigation(p: Pattern, r, decision: NavigationDecision):
    axes = tuple(decision.axes)
    if decision.axis is not None and decision.axis not in axes:
        raise AdaptionError(f"preset axis {decision.axis} not among options for {r.rid}")
    if decision.depth < 1 or (decision.depth > 1 and decision.axis is not Axis.CHILD):
        raise AdaptionError(f"invalid depth {decision.depth} for relation {r.rid}")
    param = RelationOptionParam(
        pid=p._new_id("par"), options=axes, value=decision.axis, preset=decision.axis is not None
    )
    p._register_param(param)
    r.subkind = XML_NAVIGATION
    r.axis_param = param
    r.depth = decision.depth


def _insert_ref_property(p: Pattern, element, kinds) -> Property:
    kinds = tuple(kinds)
    kp = PropertyOptionParam(
        pid=p._new_id("par"), options=kinds, value=kinds[0] if len(kinds) == 1 else None
    )
    p._register_param(kp)
    an = None
    if PropertyKind.ATTRIBUTE in kinds:
        an = TextLiteralParam(pid=p._new_id("par"))
        p._register_param(an)
    prop = Property(
        pid=p._new_id("p"),
        owner=element.eid,
        subkind=XML_PROPERTY,
        kind_param=kp,
        attribute_name=an,
    )
    element.properties.append(prop)
    p._properties[prop.pid] = prop
    return prop


def _make_reference(p: Pattern, g, r, decision: ReferenceDecision):
    src = p.element(r.source)
    tgt = p.element(r.target)
    sp = _insert_ref_property(p, src, decision.kinds)
    tp = _insert_ref_property(p, tgt, decision.kinds)
    r.subkind = XML_REFERENCE
    r.source_property = sp.pid
    r.target_property = tp.pid
    p.add_comparison(g, sp, tp, options=(CompareOp.EQUAL,), value_type=ValueType.STRING)


def _mirror_reference(p: Pattern, g, r, origin):
    """Copy of a reference relation: property copies share the origin's
    parameters; the equality comparison stays at the defining graph."""
    osp = p.prop(origin.source_property)
    otp = p.prop(origin.target_property)
    src = p.element(r.source)
    tgt = p.element(r.target)
    sp = Property(
        pid=p._new_id("p"), owner=src.eid, subkind=XML_PROPERTY,
        kind_param=osp.kind_param, attribute_name=osp.attribute_name,
    )
    src.properties.append(sp)
    p._properties[sp.pid] = sp
    p._prop_src[sp.pid] = osp.pid
    tp = Property(
        pid=p._new_id("p"), owner=tgt.eid, subkind=XML_PROPERTY,
        kind_param=otp.kind_param, attribute_name=otp.attribute_name,
    )
    tgt.properties.append(tp)
    p._properties[tp.pid] = tp
    p._prop_src[tp.pid] = otp.pid
    r.subkind = XML_REFERENCE
    r.source_property = sp.pid
    r.target_property = tp.pid


def expand_child_depth(pattern: Pattern, nav: Relation) -> list:
    """Rewrite a depth-n child navigation as n single steps through n-1
    fresh anonymous elements (no properties, no predicates).

    The expansion mirrors onto mapped copies of the navigation, keeping the
    axis-parameter discipline intact; semantics are preserved. Returns the
    chain of single-step navigations of the expanded origin.
    """
    pattern._check_mutable()
    if nav.subkind != XML_NAVIGATION:
        raise BuildError("only navigations can be depth-expanded")
    if nav.rid != pattern.relation_origin(nav.rid):
        raise BuildError("expand the navigation that owns the axis parameter; copies follow")
    axis = nav.axis_param.value if nav.axis_param else None
    if axis is not Axis.CHILD:
        raise BuildError("depth expansion requires the child axis")
    if nav.depth == 1:
        return [nav]

    n = nav.depth
    morphism_of = _morphism_by_graph(pattern)
    chains: dict = {}
    out: list = []
    for g in pattern.graphs():
        for r in list(g.relations):
            if pattern.relation_origin(r.rid) != nav.rid:
                continue
            is_origin = r.rid == nav.rid
            morphism = morphism_of.get(g.gid)
            prev = pattern.element(r.source)
            new_elems = []
            new_navs = []
            for _ in range(n - 1):
                mid = pattern.add_element(g)
                hop = Relation(
                    rid=pattern._new_id("r"),
                    source=prev.eid,
                    target=mid.eid,
                    subkind=XML_NAVIGATION,
                    depth=1,
                )
                if is_origin:
                    param = RelationOptionParam(
                        pid=pattern._new_id("par"), options=(Axis.CHILD,), value=Axis.CHILD
                    )
                    pattern._register_param(param)
                    hop.axis_param = param
                g.relations.append(hop)
                pattern._relations[hop.rid] = hop
                new_elems.append(mid)
                new_navs.append(hop)
                prev = mid
            r.source = prev.eid
            r.depth = 1
            new_navs.append(r)
            chains[r.rid] = (new_elems, new_navs)
            if is_origin:
                out = new_navs
            else:
                # mappings point at the immediately preceding graph's chain
                src_elems, src_navs = chains[pattern._rel_src[r.rid]]
                for mid, smid in zip(new_elems, src_elems):
                    pattern._elem_src[mid.eid] = smid.eid
                    if morphism is not None:
                        morphism.element_mappings.append((smid.eid, mid.eid))
                for hop, shop in zip(new_navs[:-1], src_navs[:-1]):
                    pattern._rel_src[hop.rid] = shop.rid
                    if morphism is not None:
                        morphism.relation_mappings.append((shop.rid, hop.rid))
    pattern.assert_parameter_closure()
    return out
