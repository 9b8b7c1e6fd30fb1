"""Parser, grounder and printer for the s-expression planning input.

The accepted subset: :strips, :typing, :negative-preconditions and
:conditional-effects, one domain text plus one problem text. Negative
preconditions (and negative goals) are compiled away during grounding
via complement fluents (not-p) that are maintained in the initial state
and in every effect touching p, so everything downstream is positive.

Grounding instantiates every schema over type-consistent objects,
prunes instantiations whose positive precondition contains a statically
false fluent of a static predicate (one that appears in no schema
effect), and interns exactly the fluents that occur in the surviving
model. Negated occurrences of static predicates are kept: an action
permanently blocked by such a fluent is still part of the model and of
anything derived from it.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .errors import PddlError
from .model import Action, Effect, FluentTable, PlanningModel

_TOKEN_RE = re.compile(r"\(|\)|[^\s();]+")
_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")

REQUIREMENTS = {":strips", ":typing", ":negative-preconditions", ":conditional-effects"}


@dataclass(frozen=True)
class Tok:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    for ln, line in enumerate(text.split("\n"), start=1):
        body = line.split(";", 1)[0]
        for match in _TOKEN_RE.finditer(body):
            toks.append(Tok(match.group(0), ln, match.start() + 1))
    return toks


def _read_sexprs(text: str):
    """Parse every top-level s-expression in text into nested lists of Tok."""
    toks = _tokenize(text)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            raise PddlError("unexpected end of input")
        tok = toks[pos]
        pos += 1
        if tok.text == "(":
            items = []
            while True:
                if pos >= len(toks):
                    raise PddlError("unbalanced parenthesis", tok.line, tok.col)
                if toks[pos].text == ")":
                    pos += 1
                    return items
                items.append(read())
        if tok.text == ")":
            raise PddlError("unexpected ')'", tok.line, tok.col)
        return tok

    forms = []
    while pos < len(toks):
        forms.append(read())
    return forms


def _head(form) -> str:
    if not isinstance(form, list) or not form or not isinstance(form[0], Tok):
        raise PddlError("expected a parenthesized form")
    return form[0].text.lower()


def _err(tok: Tok, message: str) -> PddlError:
    return PddlError(message, tok.line, tok.col)


# ---------------------------------------------------------------------------
# Lifted representation


@dataclass(frozen=True)
class LiftedAtom:
    pred: str
    args: tuple[str, ...]  # variables (?x) or object names


@dataclass(frozen=True)
class SchemaEffect:
    condition: tuple[LiftedAtom, ...]
    adds: tuple[LiftedAtom, ...]
    dels: tuple[LiftedAtom, ...]


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]  # (variable, type)
    pos_pre: tuple[LiftedAtom, ...]
    neg_pre: tuple[LiftedAtom, ...]
    effects: tuple[SchemaEffect, ...]


@dataclass(frozen=True)
class LiftedModel:
    """Loss-free capture of a parsed domain/problem pair."""

    domain_name: str
    problem_name: str
    types: dict[str, str]  # type -> parent ("object" is the root)
    predicates: dict[str, tuple[str, ...]]  # name -> parameter types
    objects: dict[str, str]  # name -> type (constants included)
    schemas: tuple[ActionSchema, ...]
    init: tuple[LiftedAtom, ...]
    goal_pos: tuple[LiftedAtom, ...]
    goal_neg: tuple[LiftedAtom, ...]

    def subtypes(self, t: str) -> set[str]:
        out = {t}
        changed = True
        while changed:
            changed = False
            for child, parent in self.types.items():
                if parent in out and child not in out:
                    out.add(child)
                    changed = True
        return out

    def objects_of(self, t: str) -> list[str]:
        ok = self.subtypes(t)
        return sorted(name for name, ot in self.objects.items() if ot in ok)


def _parse_typed_list(items, *, what: str) -> list[tuple[str, str]]:
    """Parse `a b - t c - t2 d` into [(name, type)], default type object."""
    out: list[tuple[str, str]] = []
    pending: list[Tok] = []
    i = 0
    while i < len(items):
        tok = items[i]
        if not isinstance(tok, Tok):
            raise PddlError(f"malformed {what} list")
        if tok.text == "-":
            if i + 1 >= len(items) or not isinstance(items[i + 1], Tok):
                raise _err(tok, f"missing type after '-' in {what} list")
            typ = items[i + 1].text.lower()
            for p in pending:
                out.append((p.text.lower(), typ))
            pending = []
            i += 2
            continue
        pending.append(tok)
        i += 1
    for p in pending:
        out.append((p.text.lower(), "object"))
    return out


def _parse_atom(form, predicates, *, allow_vars: bool) -> LiftedAtom:
    if not isinstance(form, list) or not form or not isinstance(form[0], Tok):
        raise PddlError("expected an atom")
    head = form[0]
    name = head.text.lower()
    if name not in predicates:
        raise _err(head, f"undeclared predicate {name}")
    args = []
    for a in form[1:]:
        if not isinstance(a, Tok):
            raise _err(head, f"malformed argument in atom {name}")
        if a.text.startswith("?") and not allow_vars:
            raise _err(a, f"variable {a.text} not allowed here")
        args.append(a.text.lower())
    if len(args) != len(predicates[name]):
        raise _err(head, f"arity mismatch for predicate {name}: "
                         f"expected {len(predicates[name])}, got {len(args)}")
    return LiftedAtom(name, tuple(args))


def _parse_literals(form, predicates, *, allow_vars: bool, allow_neg: bool, what: str):
    """Flatten atom | (not atom) | (and ...) into (positives, negatives)."""
    pos: list[LiftedAtom] = []
    neg: list[LiftedAtom] = []

    def walk(f):
        if isinstance(f, Tok):
            raise _err(f, f"expected a parenthesized {what}")
        if not f:
            return  # (and) and () are empty conjunctions
        head = f[0]
        kw = head.text.lower()
        if kw == "and":
            for sub in f[1:]:
                walk(sub)
        elif kw == "not":
            if not allow_neg:
                raise _err(head, f"negation not allowed in {what}")
            if len(f) != 2:
                raise _err(head, "(not ...) takes exactly one atom")
            neg.append(_parse_atom(f[1], predicates, allow_vars=allow_vars))
        elif kw in ("or", "imply", "forall", "exists", "when"):
            raise _err(head, f"unsupported construct {kw} in {what}")
        else:
            pos.append(_parse_atom(f, predicates, allow_vars=allow_vars))

    walk(form)
    return tuple(pos), tuple(neg)


def _parse_effect(form, predicates) -> list[SchemaEffect]:
    """Parse an effect into conditional-effect clauses.

    Top-level literals are gathered into one clause with an empty
    condition; each (when cond eff) becomes its own clause.
    """
    plain_adds: list[LiftedAtom] = []
    plain_dels: list[LiftedAtom] = []
    conditional: list[SchemaEffect] = []

    def walk(f):
        if isinstance(f, Tok):
            raise _err(f, "expected a parenthesized effect")
        if not f:
            return
        head = f[0]
        kw = head.text.lower()
        if kw == "and":
            for sub in f[1:]:
                walk(sub)
        elif kw == "not":
            if len(f) != 2:
                raise _err(head, "(not ...) takes exactly one atom")
            plain_dels.append(_parse_atom(f[1], predicates, allow_vars=True))
        elif kw == "when":
            if len(f) != 3:
                raise _err(head, "(when ...) takes a condition and an effect")
            cond_pos, cond_neg = _parse_literals(
                f[1], predicates, allow_vars=True, allow_neg=False, what="effect condition"
            )
            if cond_neg:
                raise _err(head, "negation not allowed in effect conditions")
            adds, dels = _parse_when_body(f[2], predicates)
            conditional.append(SchemaEffect(cond_pos, adds, dels))
        else:
            plain_adds.append(_parse_atom(f, predicates, allow_vars=True))

    def _parse_when_body(f, predicates):
        adds: list[LiftedAtom] = []
        dels: list[LiftedAtom] = []

        def inner(g):
            if isinstance(g, Tok):
                raise _err(g, "expected a parenthesized effect")
            if not g:
                return
            kw = g[0].text.lower()
            if kw == "and":
                for sub in g[1:]:
                    inner(sub)
            elif kw == "not":
                if len(g) != 2:
                    raise _err(g[0], "(not ...) takes exactly one atom")
                dels.append(_parse_atom(g[1], predicates, allow_vars=True))
            elif kw == "when":
                raise _err(g[0], "nested (when ...) is not supported")
            else:
                adds.append(_parse_atom(g, predicates, allow_vars=True))

        inner(f)
        return tuple(adds), tuple(dels)

    walk(form)
    effects = []
    if plain_adds or plain_dels or not conditional:
        effects.append(SchemaEffect((), tuple(plain_adds), tuple(plain_dels)))
    effects.extend(conditional)
    return effects


def _find_form(forms, kind: str):
    for form in forms:
        if isinstance(form, list) and form and isinstance(form[0], Tok):
            if form[0].text.lower() == "define":
                for sub in form[1:]:
                    if (isinstance(sub, list) and sub and isinstance(sub[0], Tok)
                            and sub[0].text.lower() == kind):
                        return form
    return None


def parse_model(domain_text: str, problem_text: str) -> LiftedModel:
    """Parse a domain and a problem text into one lifted model.

    Either text may contain several top-level forms (e.g. a file holding
    both the domain and the problem); the right (define ...) is picked.
    """
    domain_form = _find_form(_read_sexprs(domain_text), "domain")
    if domain_form is None:
        raise PddlError("no (define (domain ...)) form found in domain text")
    problem_form = _find_form(_read_sexprs(problem_text), "problem")
    if problem_form is None:
        raise PddlError("no (define (problem ...)) form found in problem text")

    domain_name = ""
    types: dict[str, str] = {"object": "object"}
    predicates: dict[str, tuple[str, ...]] = {}
    constants: dict[str, str] = {}
    schemas: list[ActionSchema] = []

    for section in domain_form[1:]:
        head = _head(section)
        if head == "domain":
            domain_name = section[1].text.lower() if len(section) > 1 else ""
        elif head == ":requirements":
            for req in section[1:]:
                if req.text.lower() not in REQUIREMENTS:
                    raise _err(req, f"unsupported requirement {req.text}")
        elif head == ":types":
            for name, parent in _parse_typed_list(section[1:], what="type"):
                types[name] = parent
            for name, parent in list(types.items()):
                if parent not in types:
                    types[parent] = "object"
        elif head == ":predicates":
            for p in section[1:]:
                if not isinstance(p, list) or not p:
                    raise PddlError("malformed predicate declaration")
                pname = p[0].text.lower()
                params = _parse_typed_list(p[1:], what="predicate parameter")
                for _, t in params:
                    if t not in types:
                        raise _err(p[0], f"undeclared type {t} in predicate {pname}")
                predicates[pname] = tuple(t for _, t in params)
        elif head == ":constants":
            for name, t in _parse_typed_list(section[1:], what="constant"):
                if t not in types:
                    raise PddlError(f"undeclared type {t} for constant {name}")
                constants[name] = t
        elif head == ":action":
            schemas.append(_parse_schema(section, predicates, types))
        else:
            raise _err(section[0], f"unsupported domain section {head}")

    problem_name = ""
    objects: dict[str, str] = dict(constants)
    init: list[LiftedAtom] = []
    goal_pos: tuple[LiftedAtom, ...] = ()
    goal_neg: tuple[LiftedAtom, ...] = ()

    for section in problem_form[1:]:
        head = _head(section)
        if head == "problem":
            problem_name = section[1].text.lower() if len(section) > 1 else ""
        elif head == ":domain":
            pass
        elif head == ":objects":
            for name, t in _parse_typed_list(section[1:], what="object"):
                if t not in types:
                    raise PddlError(f"undeclared type {t} for object {name}")
                objects[name] = t
        elif head == ":init":
            for atom in section[1:]:
                init.append(_parse_atom(atom, predicates, allow_vars=False))
        elif head == ":goal":
            if len(section) != 2:
                raise _err(section[0], "(:goal ...) takes exactly one formula")
            goal_pos, goal_neg = _parse_literals(
                section[1], predicates, allow_vars=False, allow_neg=True, what="goal"
            )
        else:
            raise _err(section[0], f"unsupported problem section {head}")

    lifted = LiftedModel(
        domain_name=domain_name,
        problem_name=problem_name,
        types=types,
        predicates=predicates,
        objects=objects,
        schemas=tuple(schemas),
        init=tuple(init),
        goal_pos=goal_pos,
        goal_neg=goal_neg,
    )
    _check_ground_atoms(lifted)
    return lifted


def _parse_schema(section, predicates, types) -> ActionSchema:
    name = None
    params: tuple[tuple[str, str], ...] = ()
    pos_pre: tuple[LiftedAtom, ...] = ()
    neg_pre: tuple[LiftedAtom, ...] = ()
    effects: tuple[SchemaEffect, ...] = (SchemaEffect((), (), ()),)
    i = 1
    if i < len(section) and isinstance(section[i], Tok):
        name = section[i].text.lower()
        i += 1
    if name is None:
        raise _err(section[0], "action without a name")
    while i < len(section):
        key = section[i]
        if not isinstance(key, Tok):
            raise _err(section[0], f"malformed action {name}")
        kw = key.text.lower()
        if i + 1 >= len(section):
            raise _err(key, f"missing value for {kw} in action {name}")
        value = section[i + 1]
        i += 2
        if kw == ":parameters":
            if not isinstance(value, list):
                raise _err(key, ":parameters takes a parenthesized list")
            parsed = _parse_typed_list(value, what="parameter")
            for var, t in parsed:
                if not var.startswith("?"):
                    raise _err(key, f"parameter {var} must start with '?'")
                if t not in types:
                    raise _err(key, f"undeclared type {t} in action {name}")
            params = tuple(parsed)
        elif kw == ":precondition":
            pos_pre, neg_pre = _parse_literals(
                value, predicates, allow_vars=True, allow_neg=True, what="precondition"
            )
        elif kw == ":effect":
            effects = tuple(_parse_effect(value, predicates))
        else:
            raise _err(key, f"unsupported action keyword {kw}")
    bound = {var for var, _ in params}
    for atom in itertools.chain(
        pos_pre, neg_pre, *((e.condition + e.adds + e.dels) for e in effects)
    ):
        for arg in atom.args:
            if arg.startswith("?") and arg not in bound:
                raise PddlError(f"unbound variable {arg} in action {name}")
    return ActionSchema(name, params, pos_pre, neg_pre, effects)


def _check_ground_atoms(lifted: LiftedModel) -> None:
    for where, atoms in (("init", lifted.init),
                         ("goal", lifted.goal_pos + lifted.goal_neg)):
        for atom in atoms:
            expected = lifted.predicates[atom.pred]
            for arg, t in zip(atom.args, expected):
                if arg not in lifted.objects:
                    raise PddlError(f"undeclared object {arg} in {where}")
                if lifted.objects[arg] not in lifted.subtypes(t):
                    raise PddlError(
                        f"object {arg} (type {lifted.objects[arg]}) does not fit "
                        f"type {t} of predicate {atom.pred} in {where}"
                    )
    for schema in lifted.schemas:
        param_types = dict(schema.params)
        for atom in itertools.chain(
            schema.pos_pre, schema.neg_pre,
            *((e.condition + e.adds + e.dels) for e in schema.effects),
        ):
            for arg in atom.args:
                if not arg.startswith("?") and arg not in lifted.objects:
                    raise PddlError(
                        f"undeclared constant {arg} in action {schema.name}"
                    )


# ---------------------------------------------------------------------------
# Grounding


def ground(lifted: LiftedModel) -> PlanningModel:
    """Instantiate a lifted model into a grounded PlanningModel.

    Negative preconditions, conditions and goals are replaced by
    complement fluents; the fluent set is exactly what occurs in the
    surviving actions, the initial state and the goal, with complement
    pairs kept whole.
    """
    static_preds = _static_predicates(lifted)
    init_atoms = {(a.pred, a.args) for a in lifted.init}

    grounded: list[_GroundAction] = []
    for schema in lifted.schemas:
        domains = [lifted.objects_of(t) for _, t in schema.params]
        for combo in itertools.product(*domains):
            binding = {var: obj for (var, _), obj in zip(schema.params, combo)}
            ga = _instantiate(schema, binding, combo)
            # pruning tames schema instantiation; explicitly ground
            # actions (no parameters) are kept verbatim
            if schema.params and _statically_false(ga, static_preds, init_atoms):
                continue
            grounded.append(ga)

    table = FluentTable()
    occurring: set[tuple[str, tuple[str, ...]]] = set()
    negated: set[tuple[str, tuple[str, ...]]] = set()
    for ga in grounded:
        occurring.update(ga.pos_pre)
        negated.update(ga.neg_pre)
        for cond, adds, dels in ga.effects:
            occurring.update(cond)
            occurring.update(adds)
            occurring.update(dels)
    occurring.update(init_atoms)
    occurring.update((a.pred, a.args) for a in lifted.goal_pos)
    negated.update((a.pred, a.args) for a in lifted.goal_neg)
    occurring.update(negated)

    for pred, args in sorted(occurring):
        table.intern(pred, args)
    complement: dict[tuple[str, tuple[str, ...]], int] = {}
    for pred, args in sorted(negated):
        pos = table.id_of(pred, args)
        complement[(pred, args)] = table.ensure_complement(pos)

    def fid(key):
        return table.id_of(*key)

    init = {fid(k) for k in init_atoms}
    for key, neg in complement.items():
        if key not in init_atoms:
            init.add(neg)

    actions = []
    names = set()
    for ga in grounded:
        prec = {fid(k) for k in ga.pos_pre}
        prec.update(complement[k] for k in ga.neg_pre)
        effects = []
        for cond, adds, dels in ga.effects:
            add_ids = {fid(k) for k in adds}
            del_ids = {fid(k) for k in dels}
            for k in adds:
                if k in complement:
                    del_ids.add(complement[k])
            for k in dels:
                if k in complement:
                    add_ids.add(complement[k])
            # "adds win" inside a single clause: drop deletes it re-adds
            del_ids -= add_ids
            if cond or add_ids or del_ids or len(ga.effects) == 1:
                effects.append(Effect(frozenset({fid(k) for k in cond}),
                                      frozenset(add_ids), frozenset(del_ids)))
        if ga.name in names:
            raise PddlError(f"duplicate grounded action name {ga.name}")
        names.add(ga.name)
        actions.append(Action(ga.name, frozenset(prec), tuple(effects)))

    goal = {fid((a.pred, a.args)) for a in lifted.goal_pos}
    goal.update(complement[(a.pred, a.args)] for a in lifted.goal_neg)

    fluents = frozenset(range(len(table)))
    return PlanningModel(table, fluents, tuple(actions), frozenset(init), frozenset(goal))


@dataclass
class _GroundAction:
    name: str
    pos_pre: set[tuple[str, tuple[str, ...]]]
    neg_pre: set[tuple[str, tuple[str, ...]]]
    effects: list[tuple[set, set, set]]


def _instantiate(schema: ActionSchema, binding: dict[str, str], combo) -> _GroundAction:
    def g(atom: LiftedAtom):
        return (atom.pred, tuple(binding.get(a, a) for a in atom.args))

    name = schema.name if not combo else schema.name + "_" + "_".join(combo)
    return _GroundAction(
        name=name,
        pos_pre={g(a) for a in schema.pos_pre},
        neg_pre={g(a) for a in schema.neg_pre},
        effects=[
            ({g(a) for a in e.condition}, {g(a) for a in e.adds}, {g(a) for a in e.dels})
            for e in schema.effects
        ],
    )


def _static_predicates(lifted: LiftedModel) -> set[str]:
    dynamic = set()
    for schema in lifted.schemas:
        for e in schema.effects:
            for atom in e.adds + e.dels:
                dynamic.add(atom.pred)
    return set(lifted.predicates) - dynamic


def _statically_false(ga: _GroundAction, static_preds, init_atoms) -> bool:
    """True when a positive precondition on a static predicate is false.

    Negated static preconditions are never grounds for pruning: an
    action permanently disabled by them stays in the model so that
    abstraction can reason about why it is disabled.
    """
    return any(key[0] in static_preds and key not in init_atoms for key in ga.pos_pre)


# ---------------------------------------------------------------------------
# Printing grounded models back out


def write_domain(m: PlanningModel, name: str = "compiled") -> str:
    preds: dict[tuple[str, int], None] = {}
    for fid in sorted(m.fluents):
        f = m.table.fluent(fid)
        preds.setdefault((f.name, len(f.args)), None)
    lines = [f"(define (domain {name})",
             "  (:requirements :strips :conditional-effects)"]
    consts = sorted({a for fid in m.fluents for a in m.table.fluent(fid).args})
    if consts:
        lines.append(f"  (:constants {' '.join(consts)})")
    decls = []
    for pname, arity in sorted(preds):
        args = " ".join(f"?a{i}" for i in range(arity))
        decls.append(f"({pname} {args})" if args else f"({pname})")
    lines.append(f"  (:predicates {' '.join(decls)})")
    for a in m.actions:
        lines.append(f"  (:action {a.name}")
        lines.append("    :parameters ()")
        lines.append(f"    :precondition {_conj(m, a.prec)}")
        lines.append(f"    :effect {_effect_sexpr(m, a)})")
    lines.append(")")
    return "\n".join(lines)


def write_problem(m: PlanningModel, name: str = "compiled",
                  domain_name: str = "compiled") -> str:
    lines = [f"(define (problem {name})", f"  (:domain {domain_name})"]
    lines.append("  (:init " + " ".join(m.table.sexpr(f) for f in sorted(m.init)) + ")")
    lines.append(f"  (:goal {_conj(m, m.goal)})")
    lines.append(")")
    return "\n".join(lines)


def _conj(m: PlanningModel, ids) -> str:
    parts = [m.table.sexpr(f) for f in sorted(ids)]
    return "(and " + " ".join(parts) + ")" if parts else "(and)"


def _effect_sexpr(m: PlanningModel, a: Action) -> str:
    parts = []
    for e in a.effects:
        lits = [m.table.sexpr(f) for f in sorted(e.adds)]
        lits += [f"(not {m.table.sexpr(f)})" for f in sorted(e.dels)]
        if not lits:
            continue
        body = lits[0] if len(lits) == 1 else "(and " + " ".join(lits) + ")"
        if e.condition:
            parts.append(f"(when {_conj(m, e.condition)} {body})")
        else:
            parts.extend(lits)
    if not parts:
        return "(and)"
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")"


def parse_ground_formula(text: str, m: PlanningModel):
    """Parse an and/or formula over ground atoms into a DNF tree.

    Returns the nested tuple tree expected by normalize_dnf; atoms are
    resolved to fluent ids of m (raises PddlError when unresolved).
    """
    forms = _read_sexprs(text)
    if len(forms) != 1:
        raise PddlError("expected exactly one formula")

    def walk(f):
        if isinstance(f, Tok):
            raise _err(f, "expected a parenthesized formula")
        if not f:
            return ("and",)
        head = f[0]
        kw = head.text.lower()
        if kw in ("and", "or"):
            return (kw, *(walk(sub) for sub in f[1:]))
        if kw == "not":
            raise _err(head, "negation is not supported in formulas")
        args = tuple(t.text.lower() for t in f[1:])
        fid = m.table.get(kw, args)
        if fid is None or fid not in m.fluents:
            raise _err(head, f"unresolved atom ({kw} {' '.join(args)})")
        return fid

    return walk(forms[0])
