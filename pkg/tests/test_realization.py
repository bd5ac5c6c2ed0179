from fractions import Fraction
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from filtra.graph import ValidationError, check_path
from filtra.measures import two_state_chain_measure
from filtra.realization import (
    FiniteFiltration,
    bernoulli_filtration,
    filtration_from_dict,
    filtration_to_dict,
    finite_isomorphism_check,
    graph_filtration,
    load_filtration,
    random_filtration,
    realize,
)


def check_realization(f: FiniteFiltration):
    r = realize(f)
    r.measure.check()
    paths = list(r.atom_paths.values())
    assert sorted(r.atom_paths) == sorted(a for a, _ in f.atoms)
    assert len(set(paths)) == len(paths)
    mass = f.mass
    for a, p in r.atom_paths.items():
        check_path(r.graph, p)
        assert r.measure.cylinder_prob(p) == mass[a]
    assert finite_isomorphism_check(f, r)
    return r


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_random_round_trip(seed, depth):
    check_realization(random_filtration(seed, depth=depth, max_atoms=40))


def test_seeded_48_atom_example():
    rng = random.Random(48)
    raw = [rng.randint(1, 3) for _ in range(48)]
    atoms = [(f"x{i}", Fraction(r, sum(raw))) for i, r in enumerate(raw)]
    parts = [[[a] for a, _ in atoms]]
    for size in (2, 2, 3, 4):
        prev = parts[-1]
        parts.append([sum(prev[i : i + size], []) for i in range(0, len(prev), size)])
    check_realization(FiniteFiltration(atoms, parts))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_atom_order_never_changes_the_verdict(seed):
    f = random_filtration(seed, depth=3, max_atoms=30)
    rng = random.Random(seed)
    atoms = list(f.atoms)
    rng.shuffle(atoms)
    parts = [[list(b) for b in p] for p in f.partitions]
    for p in parts:
        rng.shuffle(p)
        for b in p:
            rng.shuffle(b)
    g = FiniteFiltration(atoms, parts)
    assert finite_isomorphism_check(realize(f).as_filtration(), realize(g).as_filtration())
    assert finite_isomorphism_check(f, realize(g))


def test_dyadic_hierarchy_gives_binary_chain():
    n = 4
    atoms = [(format(i, "04b"), Fraction(1, 2**n)) for i in range(2**n)]
    parts = [[[a] for a, _ in atoms]]
    for k in range(1, n + 1):
        blocks: dict = {}
        for a, _ in atoms:
            blocks.setdefault(a[k:], []).append(a)
        parts.append(list(blocks.values()))
    labels = {a: int(a, 2) for a, _ in atoms}
    r = check_realization(FiniteFiltration(atoms, parts, labels))
    assert r.graph.depth == n
    # each non-root vertex has two incoming copies of weight 1/2
    for lv in r.graph.levels[1:]:
        for v in lv:
            assert sorted(lam for _, _, lam in r.equipment.incoming(v)) == [Fraction(1, 2)] * 2


def test_trivial_filtration():
    f = FiniteFiltration([("a", Fraction(1, 3)), ("b", Fraction(2, 3))], [[["a"], ["b"]]])
    r = check_realization(f)
    # one level of atom vertices above the root; each atom is a one-step path
    assert r.depth == 0
    assert [len(lv) for lv in r.graph.levels] == [1, 2]
    assert all(len(p) == 1 for p in r.atom_paths.values())


def test_two_state_chain_is_finitely_bernoulli():
    g, eq, m = two_state_chain_measure(Fraction(3, 4), 4)
    chain = graph_filtration(g, eq, m, 4)
    bern = bernoulli_filtration([Fraction(3, 4), Fraction(1, 4)], 4)
    assert finite_isomorphism_check(chain, bern)


def test_different_bernoullis_differ():
    a = bernoulli_filtration([Fraction(1, 2)] * 2, 2)
    b = bernoulli_filtration([Fraction(1, 3), Fraction(2, 3)], 2)
    assert not finite_isomorphism_check(a, b)
    with pytest.raises(ValueError):
        finite_isomorphism_check(a, bernoulli_filtration([Fraction(1, 2)] * 2, 3))


def test_labels_enter_the_invariant():
    atoms = [("a", Fraction(1, 2)), ("b", Fraction(1, 2))]
    parts = [[["a"], ["b"]], [["a", "b"]]]
    same = FiniteFiltration(atoms, parts, {"a": 0, "b": 1})
    other = FiniteFiltration(atoms, parts, {"a": 0, "b": 0})
    assert not finite_isomorphism_check(same, other)
    check_realization(same)


@pytest.mark.parametrize(
    "atoms, parts",
    [
        ([("a", Fraction(1, 2)), ("b", Fraction(1, 3))], [[["a"], ["b"]]]),
        ([("a", Fraction(1, 2)), ("a", Fraction(1, 2))], [[["a"], ["a"]]]),
        ([("a", 0), ("b", 1)], [[["a"], ["b"]]]),
        ([("a", Fraction(1, 2)), ("b", Fraction(1, 2))], [[["a", "b"]]]),
        ([("a", Fraction(1, 2)), ("b", Fraction(1, 2))], [[["a"], ["b"]], [["a"]]]),
        (
            [("a", Fraction(1, 4)), ("b", Fraction(1, 4)), ("c", Fraction(1, 2))],
            [[["a"], ["b"], ["c"]], [["a", "b"], ["c"]], [["a", "c"], ["b"]]],
        ),
    ],
)
def test_invalid_filtrations_rejected(atoms, parts):
    with pytest.raises(ValidationError):
        FiniteFiltration(atoms, parts)


def test_json_round_trip(tmp_path):
    f = random_filtration(7, depth=3, max_atoms=20)
    path = tmp_path / "f.json"
    path.write_text(json.dumps(filtration_to_dict(f)))
    g = load_filtration(path)
    assert g.atoms == f.atoms and g.partitions == f.partitions
    assert filtration_from_dict(filtration_to_dict(g)).invariant() == f.invariant()
