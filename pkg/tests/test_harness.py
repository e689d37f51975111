import json
from fractions import Fraction

import pytest

from folnerdim.cli import main
from folnerdim.errors import PreconditionError
from folnerdim.graphs import iso_ratio, k_interior
from folnerdim.groups import GroupContext, ball_tree
from folnerdim.harness import (
    ExperimentSpec,
    bound_check,
    box,
    diagonal_conditions,
    diagonal_sequence,
    dimension_sequence,
    folner_sequence,
    quotient_sequence,
    symbol_at,
    torus_oracle,
)
from folnerdim.operators import GroupRingMatrix
from folnerdim.tiling import quasi_tile

from conftest import H3, Z, Z2, averaging2, e1, e2, interval


def labels_of(g):
    return [tuple(x) for x in g.labels]


def test_folner_sequences():
    g = folner_sequence(Z, (10, 100))
    assert [x.n for x in g] == [21, 201]
    assert [iso_ratio(Z, labels_of(x)) for x in g] == [Fraction(2, 21), Fraction(2, 201)]
    b, c = folner_sequence(Z2, (5, 10))
    assert b.n == 121 and iso_ratio(Z2, labels_of(b)) == Fraction(121 - 81, 121)
    assert iso_ratio(Z2, labels_of(c)) == Fraction(441 - 361, 441)
    (h,) = folner_sequence(H3, (3,))
    assert h.n == ball_tree(H3, 3).prefix(3) == 53


def test_quotient_sequences():
    (c,) = quotient_sequence(Z, (12,))
    assert c.n == 12 and set(c.degrees().tolist()) == {2}
    (t,) = quotient_sequence(Z2, (6,))
    assert t.n == 36 and set(t.degrees().tolist()) == {4}
    with pytest.raises(PreconditionError):
        quotient_sequence(Z, (6, 6))


def test_diagonal_sequences():
    (g,) = diagonal_sequence(Z2, [(2, 0)], [20])
    assert g.n == 82
    cond = diagonal_conditions([g])
    F = labels_of(g)
    assert cond["iso_ratios"] == [iso_ratio(g.label_ctx, F)]
    # k = 1 similarity needs 1 != x^2, which fails in Z/2 x Z
    assert cond["similar"] == [0]
    seq = diagonal_sequence(Z2, [(4, 0), (12, 0), (24, 0)], [3, 6, 12])
    cond = diagonal_conditions(seq)
    assert cond["iso_decreasing"]
    assert cond["similar"][-1] == Fraction(len(k_interior(seq[-1].label_ctx, labels_of(seq[-1]), 3)), seq[-1].n)
    (d,) = diagonal_sequence(Z2, [(1, 0)], [7])
    assert d.n == 15
    with pytest.raises(PreconditionError):
        diagonal_sequence(Z2, [(4, 0), (6, 0)], [3, 6])
    with pytest.raises(PreconditionError):
        diagonal_sequence(Z2, [(4, 4)], [3])


def test_box_helper_wraps_small_moduli():
    q = GroupContext.abelian_quotient((3, 0))
    assert len(box(q, 2)) == 15


def test_torus_oracle():
    assert torus_oracle(e1()) == 0
    assert torus_oracle(e2()) == 1
    assert torus_oracle(averaging2()) == 0
    assert torus_oracle(GroupRingMatrix.zero(Z, 2)) == 2
    assert symbol_at(e1(), [Fraction(3)]) == [[Fraction(-2)]]
    with pytest.raises(PreconditionError):
        torus_oracle(GroupRingMatrix.identity(H3))


def _spec(tmp_path, op, **kw):
    path = tmp_path / "op.txt"
    path.write_text(op.to_text())
    data = {"group": str(op.ctx), "operator": str(path), "kind": "quotient", "schedule": [4, 8, 16, 32, 64]}
    data.update(kw)
    return ExperimentSpec.from_json(data)


def test_dimension_sequence_quotients(tmp_path):
    rep = dimension_sequence(_spec(tmp_path, e1()), write=False)
    assert [s.normalized for s in rep.steps] == [Fraction(1, m) for m in (4, 8, 16, 32, 64)]
    assert rep.oracle == 0
    rep = dimension_sequence(_spec(tmp_path, e2(), schedule=[10, 20]), write=False)
    assert [s.normalized for s in rep.steps] == [Fraction(11, 10), Fraction(21, 20)]
    rep = dimension_sequence(_spec(tmp_path, GroupRingMatrix.identity(Z)), write=False)
    assert all(s.normalized == 0 for s in rep.steps)


def test_dimension_sequence_heisenberg_has_no_oracle(tmp_path):
    A = GroupRingMatrix(H3, 1, {(0, 0, 0): ((1,),), (1, 0, 0): ((-1,),)})
    rep = dimension_sequence(_spec(tmp_path, A, kind="folner", schedule=[1, 2, 3]), write=False)
    assert rep.oracle is None and rep.tail_gap is not None
    assert all(0 <= s.normalized <= 1 for s in rep.steps)


def test_outputs_are_reproducible(tmp_path, monkeypatch):
    out = {"csv": str(tmp_path / "a.csv"), "json": str(tmp_path / "a.json"), "svg": str(tmp_path / "a.svg")}
    dimension_sequence(_spec(tmp_path, e1(), outputs=out, seed=3))
    first = (tmp_path / "a.csv").read_bytes()
    monkeypatch.setenv("FOLNERDIM_WORKERS", "3")
    dimension_sequence(_spec(tmp_path, e1(), outputs=out, seed=3))
    assert (tmp_path / "a.csv").read_bytes() == first
    lines = first.decode().splitlines()
    assert lines[0].startswith("n,vertices,kernel_dim,normalized")
    assert lines[-1].startswith("64,64,1,1/64,0.015625000000,0,")
    assert json.loads((tmp_path / "a.json").read_text())["steps"][0]["normalized"] == "1/4"
    assert (tmp_path / "a.svg").read_text().startswith("<svg")


def test_spec_validation(tmp_path):
    with pytest.raises(PreconditionError):
        _spec(tmp_path, e1(), schedule=[8, 4])
    with pytest.raises(PreconditionError):
        _spec(tmp_path, e1(), epsilon=1)
    with pytest.raises(PreconditionError):
        _spec(tmp_path, e1(), kind="spiral")


def test_step_failures_are_recorded(tmp_path, monkeypatch):
    import folnerdim.harness as h

    real = h.build_Tn

    def flaky(B, A):
        if B.n == 8:
            raise RuntimeError("boom")
        return real(B, A)

    monkeypatch.setattr(h, "build_Tn", flaky)
    rep = dimension_sequence(_spec(tmp_path, e1()), write=False)
    assert [s.error is not None for s in rep.steps] == [False, True, False, False, False]
    assert rep.steps[2].normalized == Fraction(1, 16)


def test_bound_check_examples():
    B = folner_sequence(Z, (120,))[0]
    T = quasi_tile(B, [interval(n) for n in range(1, 40)], Fraction(1, 4))
    rep = bound_check(e1(), B, Fraction(1, 4), Fraction(1, 10), T, 0)
    assert rep["lower"] == Fraction(-3, 40) and rep["upper"] == Fraction(1, 10) / Fraction(3, 4) + Fraction(1, 4)
    assert rep["lower_ok"] and rep["upper_ok"]
    rep = bound_check(GroupRingMatrix.zero(Z), B, Fraction(1, 4), Fraction(1, 10), T, 1)
    assert rep["normalized"] == 1 and rep["lower_ok"] and rep["upper_ok"]
    with pytest.raises(PreconditionError):
        bound_check(e1(), B, Fraction(1, 4), Fraction(1, 10), None, 0)
    T.witness.subsets[0] = frozenset()
    with pytest.raises(PreconditionError):
        bound_check(e1(), B, Fraction(1, 4), Fraction(1, 10), T, 0)


def test_cli(tmp_path, capsys):
    op = tmp_path / "e2.op"
    op.write_text(e2().to_text())
    assert main(["group", "info", "H3", "--radius", "2"]) == 0
    assert "ball sizes 1 5 17" in capsys.readouterr().out
    assert main(["op", "show", str(op)]) == 0
    assert "propagation 1" in capsys.readouterr().out
    assert main(["oracle", "torus", "--op", str(op), "--seed", "4"]) == 0
    assert capsys.readouterr().out.strip() == "1"
    assert main(["folner", "build", "--group", "Z", "--schedule", "10,100"]) == 0
    assert "10,21,20,2/21" in capsys.readouterr().out
    assert main(["quotient", "build", "--group", "Z^2", "--schedule", "6", "--out", str(tmp_path / "g")]) == 0
    assert (tmp_path / "g" / "quotient_6.graph").exists()
    capsys.readouterr()
    assert main(["diagonal", "build", "--group", "Z^2", "--subgroups", "2,0", "--schedule", "20"]) == 0
    assert "20,82," in capsys.readouterr().out
    tj = tmp_path / "t.json"
    assert main(["tile", "run", "--epsilon", "1/4", "--group", "Z/600", "--shapes", "40", "--out", str(tj)]) == 0
    assert main(["tile", "verify", str(tj)]) == 0
    assert main(["bounds", "check", "--op", str(op), "--box", "60", "--shapes", "20"]) == 0
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"group": "Z", "operator": "e2.op", "schedule": [10, 20],
                                "outputs": {"csv": str(tmp_path / "o.csv")}}))
    capsys.readouterr()
    assert main(["dimseq", "run", "--spec", str(spec)]) == 0
    assert "10,10,11,11/10" in capsys.readouterr().out
    assert main(["group", "info", "Q"]) == 2
