"""Parameter binding: turning abstract patterns into concrete ones.

``bind`` sets a single parameter, ``apply_bindings`` consumes parsed
binding files, ``missing_bindings`` reports what is still open and
``finalize`` flips the pattern to the concrete level, validates it and
freezes it. Comparisons whose open parameters are left entirely unbound
by a binding file are treated as ignored and pruned before finalizing.
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation
from typing import Iterable, List, Optional, Tuple, Union

from .model import (
    Axis,
    BooleanParam,
    Comparison,
    CompareOp,
    DateParam,
    DateTimeParam,
    Level,
    Match,
    NumberParam,
    OptionParam,
    Parameter,
    Pattern,
    PatternError,
    PropertyKind,
    PropertyOptionParam,
    RelationOptionParam,
    ComparisonOptionParam,
    TextListParam,
    TextLiteralParam,
    TimeParam,
    UnknownParameterValue,
    ValueType,
    XML_NAVIGATION,
)
from .validation import validate


class ConcretisationError(PatternError):
    """A binding is rejected or finalization is impossible."""


_COMPARE_TOKENS = {
    "equal": CompareOp.EQUAL,
    "unequal": CompareOp.NOT_EQUAL,
    "not-equal": CompareOp.NOT_EQUAL,
    "less": CompareOp.LESS,
    "less-equal": CompareOp.LESS_EQ,
    "less-or-equal": CompareOp.LESS_EQ,
    "greater": CompareOp.GREATER,
    "greater-equal": CompareOp.GREATER_EQ,
    "greater-or-equal": CompareOp.GREATER_EQ,
}

_AXIS_TOKENS = {a.value: a for a in Axis}

_KIND_TOKENS = {
    "name": PropertyKind.NAME,
    "data": PropertyKind.DATA,
    "content": PropertyKind.DATA,
    "attribute": PropertyKind.ATTRIBUTE,
}

_CHILD_DEPTH_RE = re.compile(r"^child([0-9]+)$")

_TEMPORAL_BY_TYPE = {
    ValueType.DATE: DateParam,
    ValueType.TIME: TimeParam,
    ValueType.DATETIME: DateTimeParam,
}

_LITERAL_VALUE_TYPE = {
    TextLiteralParam: ValueType.STRING,
    TextListParam: ValueType.STRING,
    NumberParam: ValueType.NUMBER,
    BooleanParam: ValueType.BOOLEAN,
    DateParam: ValueType.DATE,
    TimeParam: ValueType.TIME,
    DateTimeParam: ValueType.DATETIME,
}


def _resolve_param(pattern: Pattern, selector) -> Parameter:
    if isinstance(selector, Parameter):
        if selector.pid not in pattern._params:
            raise ConcretisationError(f"parameter {selector.pid} does not belong to this pattern")
        return pattern._params[selector.pid]
    if isinstance(selector, str):
        found = pattern.param_by_name(selector)
        if found is not None:
            return found
        if selector in pattern._params:
            return pattern._params[selector]
    raise ConcretisationError(f"unknown parameter {selector!r}")


def bind(pattern: Pattern, selector, value) -> Pattern:
    """Set one parameter.

    ``selector`` is a parameter, its id, or its display name. Accepted
    values depend on the parameter kind: enum members or their tokens for
    option parameters (``("attribute", name)`` selects the attribute kind
    together with its name, ``childN`` selects the child axis with a step
    depth), plain Python literals for value parameters. Binding an unknown
    placeholder replaces it by the typed literal inferred from the value.
    """
    if pattern.frozen:
        raise ConcretisationError("pattern is frozen; bind before finalizing")
    param = _resolve_param(pattern, selector)
    if isinstance(param, OptionParam):
        _bind_option(pattern, param, value)
    elif isinstance(param, UnknownParameterValue):
        _replace_unknown(pattern, param, value)
    else:
        _bind_value(pattern, param, value)
    pattern.assert_parameter_closure()
    return pattern


def _reject_rebind(param: Parameter, same: bool):
    if same:
        return
    raise ConcretisationError(
        f"parameter {param.display_name} is already set and cannot be rebound"
    )


def _bind_option(pattern: Pattern, param: OptionParam, value):
    choice, depth = _parse_option_value(param, value)
    if param.predefined:
        _reject_rebind(param, choice == param.value and (depth is None or depth == 1))
        return
    if param.value is not None and not param.preset:
        _reject_rebind(param, choice == param.value)
    if choice not in param.options:
        raise ConcretisationError(
            f"{_token_of(choice)} is not an option of {param.display_name}"
        )
    if isinstance(param, RelationOptionParam):
        if depth is not None and depth > 1 and choice is not Axis.CHILD:
            raise ConcretisationError("step depth beyond one requires the child axis")
        for nav in _navigations_of(pattern, param):
            nav.depth = depth if depth is not None else 1
    param.value = choice
    param.preset = False
    if isinstance(param, PropertyOptionParam):
        attr_name = value[1] if isinstance(value, tuple) and len(value) == 2 else None
        if choice is PropertyKind.ATTRIBUTE:
            if attr_name is None:
                raise ConcretisationError(
                    f"{param.display_name}: the attribute kind needs an attribute name"
                )
            target = _attribute_param_of(pattern, param)
            if target is None:
                raise ConcretisationError(
                    f"{param.display_name}: no attribute-name parameter available"
                )
            _bind_value(pattern, target, attr_name)


def _parse_option_value(param: OptionParam, value):
    """(enum choice, optional depth) for an option binding."""
    depth = None
    if isinstance(value, tuple) and len(value) == 2 and isinstance(param, RelationOptionParam):
        if isinstance(value[0], (Axis, str)) and isinstance(value[1], int):
            value, depth = value
    if isinstance(value, tuple) and len(value) == 2 and isinstance(param, PropertyOptionParam):
        value = value[0]
    if isinstance(value, (CompareOp, Axis, PropertyKind)):
        return value, depth
    if not isinstance(value, str):
        raise ConcretisationError(f"cannot interpret {value!r} as an option choice")
    token = value.strip()
    if isinstance(param, ComparisonOptionParam):
        if token in _COMPARE_TOKENS:
            return _COMPARE_TOKENS[token], depth
    elif isinstance(param, RelationOptionParam):
        m = _CHILD_DEPTH_RE.match(token)
        if m:
            return Axis.CHILD, int(m.group(1))
        if token in _AXIS_TOKENS:
            return _AXIS_TOKENS[token], depth
    elif isinstance(param, PropertyOptionParam):
        if token in _KIND_TOKENS:
            return _KIND_TOKENS[token], depth
    raise ConcretisationError(f"unknown option token {token!r} for {param.display_name}")


def _token_of(choice) -> str:
    return getattr(choice, "value", str(choice))


def _navigations_of(pattern: Pattern, param: RelationOptionParam) -> list:
    """Navigations carrying the parameter plus their mapped copies."""
    owners = {
        r.rid
        for r in pattern._relations.values()
        if r.subkind == XML_NAVIGATION and r.axis_param is param
    }
    return [
        r
        for r in pattern._relations.values()
        if r.subkind == XML_NAVIGATION and pattern.relation_origin(r.rid) in owners
    ]


def _attribute_param_of(pattern: Pattern, kind_param: PropertyOptionParam):
    for prop in pattern._properties.values():
        if prop.kind_param is kind_param and prop.attribute_name is not None:
            return prop.attribute_name
    return None


def _bind_value(pattern: Pattern, param: Parameter, value):
    if isinstance(param, TextLiteralParam):
        if not isinstance(value, str):
            raise ConcretisationError(f"{param.display_name} expects a text value")
        if param.value is not None:
            _reject_rebind(param, param.value == value)
        param.value = value
    elif isinstance(param, TextListParam):
        if isinstance(value, str):
            value = (value,)
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
            raise ConcretisationError(f"{param.display_name} expects a list of text values")
        value = tuple(value)
        if param.values is not None:
            _reject_rebind(param, set(param.values) == set(value))
        param.values = value
    elif isinstance(param, NumberParam):
        try:
            number = value if isinstance(value, Decimal) else Decimal(str(value))
        except InvalidOperation as exc:
            raise ConcretisationError(f"{param.display_name} expects a number, got {value!r}") from exc
        if param.value is not None:
            _reject_rebind(param, param.value == number)
        param.value = number
    elif isinstance(param, BooleanParam):
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in ("true", "1"):
                value = True
            elif lowered in ("false", "0"):
                value = False
        if not isinstance(value, bool):
            raise ConcretisationError(f"{param.display_name} expects a boolean")
        if param.value is not None:
            _reject_rebind(param, param.value == value)
        param.value = value
    elif isinstance(param, (DateParam, TimeParam, DateTimeParam)):
        if not isinstance(value, str) or not param.lexical_re.match(value):
            raise ConcretisationError(
                f"{param.display_name}: {value!r} violates the {type(param).__name__} lexical form"
            )
        if param.value is not None:
            _reject_rebind(param, param.value == value)
        param.value = value
    else:
        raise ConcretisationError(f"cannot bind a value to {type(param).__name__}")


def _owning_comparison(pattern: Pattern, param: Parameter) -> Optional[Comparison]:
    for g in pattern.graphs():
        for op in g.operators:
            if isinstance(op, Comparison):
                for side in (op.left, op.right):
                    if side.kind == "param" and side.target == param.pid:
                        return op
    return None


def _replace_unknown(pattern: Pattern, param: UnknownParameterValue, value):
    comparison = _owning_comparison(pattern, param)
    want = comparison.value_type if comparison is not None else ValueType.UNSPECIFIED
    if want in _TEMPORAL_BY_TYPE:
        new: Parameter = _TEMPORAL_BY_TYPE[want](pid="")
    elif isinstance(value, bool):
        new = BooleanParam(pid="")
    elif isinstance(value, (int, float, Decimal)):
        new = NumberParam(pid="")
    elif isinstance(value, str):
        new = TextLiteralParam(pid="")
    elif isinstance(value, (list, tuple)):
        new = TextListParam(pid="")
    else:
        raise ConcretisationError(f"cannot infer a literal type for {value!r}")
    inferred = _LITERAL_VALUE_TYPE[type(new)]
    if want not in (ValueType.UNSPECIFIED, inferred):
        raise ConcretisationError(
            f"{param.display_name}: literal type {inferred.value} disagrees with the comparison type {want.value}"
        )
    pattern.replace_parameter(param, new)
    _bind_value(pattern, new, value)
    if comparison is not None and comparison.value_type is ValueType.UNSPECIFIED:
        comparison.value_type = inferred


def missing_bindings(pattern: Pattern) -> List[str]:
    """Display names of parameters still unset, in parameter-list order.

    Attribute-name parameters count only once their property has the
    attribute kind selected. Empty exactly when the parameter constraints
    of a concrete pattern are met.
    """
    out = []
    for param in pattern.parameter_list:
        if isinstance(param, UnknownParameterValue):
            out.append(param.display_name)
        elif isinstance(param, OptionParam):
            if param.value is None:
                out.append(param.display_name)
        elif not param.is_set():
            owners = [p for p in pattern._properties.values() if p.attribute_name is param]
            if owners:
                if any(p.kind_param is not None and p.kind_param.value is PropertyKind.ATTRIBUTE for p in owners):
                    out.append(param.display_name)
            else:
                out.append(param.display_name)
    return out


def finalize(pattern: Pattern) -> Pattern:
    """Flip a fully bound pattern to the concrete level, validate, freeze."""
    if pattern.frozen:
        return pattern
    missing = missing_bindings(pattern)
    if missing:
        raise ConcretisationError("unbound parameters: " + ", ".join(missing))
    pattern.level = Level.CONCRETE
    violations = validate(pattern, Level.CONCRETE)
    if violations:
        pattern.level = Level.ABSTRACT_XML
        raise ConcretisationError(
            "pattern does not validate at the concrete level: " + "; ".join(map(str, violations))
        )
    pattern.freeze()
    return pattern


# ---------------------------------------------------------------------------
# binding files
# ---------------------------------------------------------------------------


def apply_bindings(pattern: Pattern, bindings: Iterable[Tuple[str, object]]) -> Pattern:
    """Apply parsed ``key = value`` entries (see ``patternio.parse_bindings``).

    Repeating a key with the same value is tolerated; with a different
    value it is an error. Unknown keys are errors.
    """
    seen: dict = {}
    for key, value in bindings:
        if key in seen and seen[key] != value:
            raise ConcretisationError(f"conflicting bindings for {key}")
        seen[key] = value
        bind(pattern, key, _coerce_tagged(value))
    return pattern


def _coerce_tagged(value):
    """Map tagged values from the binding-file parser onto bind() inputs."""
    if isinstance(value, tuple) and len(value) == 2 and value[0] == "token":
        token = value[1]
        if token in ("true", "false"):
            return token
        return token
    if isinstance(value, tuple) and len(value) == 2 and value[0] == "text":
        return value[1]
    if isinstance(value, tuple) and len(value) == 2 and value[0] == "list":
        return tuple(value[1])
    if isinstance(value, tuple) and len(value) == 2 and value[0] == "number":
        return value[1]
    if isinstance(value, tuple) and len(value) == 2 and value[0] == "pair":
        return value[1]
    return value


def prune_unbound_comparisons(pattern: Pattern) -> List[str]:
    """Remove comparisons none of whose open parameters got bound.

    A comparison left entirely untouched by a concretisation is treated as
    not wanted: the operator, the properties that only it referenced and
    the then-unreferenced parameters disappear. Returns the removed
    operator ids.
    """
    if pattern.frozen:
        raise ConcretisationError("pattern is frozen")
    removed = []
    for g in pattern.graphs():
        for op in list(g.operators):
            if not isinstance(op, Comparison):
                continue
            open_params = _open_params(pattern, op)
            if open_params and all(not _param_bound(p) for p in open_params):
                g.operators.remove(op)
                del pattern._operators[op.oid]
                removed.append(op.oid)
    if removed:
        _sweep_orphan_properties(pattern)
        _sweep_orphan_params(pattern)
        pattern.assert_parameter_closure()
    return removed


def _open_params(pattern: Pattern, op: Comparison) -> list:
    params = []
    if op.op_param is not None and not op.op_param.predefined:
        params.append(op.op_param)
    for side in (op.left, op.right):
        if side.kind == "param":
            params.append(pattern._params[side.target])
        elif side.kind == "property":
            prop = pattern._properties[side.target]
            kp = prop.kind_param
            if kp is not None and not kp.predefined:
                params.append(kp)
    return params


def _param_bound(param: Parameter) -> bool:
    if isinstance(param, UnknownParameterValue):
        return False
    if isinstance(param, OptionParam):
        return param.value is not None and not param.preset
    return param.is_set()


def _sweep_orphan_properties(pattern: Pattern):
    used: set = set()
    for g in pattern.graphs():
        for op in g.operators:
            if isinstance(op, Match):
                used.add(pattern.property_origin(op.property))
            else:
                for side in (op.left, op.right):
                    if side.kind == "property":
                        used.add(pattern.property_origin(side.target))
        for r in g.relations:
            for pid in (r.source_property, r.target_property):
                if pid:
                    used.add(pattern.property_origin(pid))
    for g in pattern.graphs():
        for e in g.elements:
            for prop in list(e.properties):
                if pattern.property_origin(prop.pid) not in used:
                    e.properties.remove(prop)
                    del pattern._properties[prop.pid]
                    pattern._prop_src.pop(prop.pid, None)


def _sweep_orphan_params(pattern: Pattern):
    referenced = {p.pid for p in pattern.referenced_params()}
    for param in list(pattern.parameter_list):
        if param.pid not in referenced:
            pattern.parameter_list.remove(param)
            del pattern._params[param.pid]


def concretize(pattern: Pattern, bindings: Iterable[Tuple[str, object]]) -> Pattern:
    """Binding-file driven concretisation: apply, prune ignored
    comparisons, finalize."""
    apply_bindings(pattern, bindings)
    prune_unbound_comparisons(pattern)
    return finalize(pattern)
