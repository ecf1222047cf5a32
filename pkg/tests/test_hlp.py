import pytest

from sixvertex_airy.errors import BudgetExceeded, InvalidChain, OutOfRange
from sixvertex_airy.hlp import HLChain, chain_weight, truncated_joint_law
from sixvertex_airy.params import param_convert
from sixvertex_airy.sixvertex import exact_joint_height_law

A, T = 0.3, 0.3
C = (1 - A * A) / (1 - T * A * A)


def test_empty_chain_weight():
    assert chain_weight(HLChain.of([[]], [[]]), A, T) == pytest.approx(C, rel=1e-15)


def test_single_box_chain_weight():
    assert chain_weight(HLChain.of([[1]], [[1]]), A, T) == pytest.approx(C * A * (1 - T) * A, rel=1e-15)


def test_single_row_weights_sum_to_one():
    total = sum(chain_weight(HLChain.of([[k]] if k else [[]], [[k]] if k else [[]]), A, T) for k in range(80))
    assert total == pytest.approx(1.0, abs=1e-15)


def test_invalid_chains():
    with pytest.raises(InvalidChain):
        chain_weight(HLChain.of([[1, 1]], [[1, 1]]), A, T)
    with pytest.raises(InvalidChain):
        chain_weight(HLChain.of([[1], [3, 2]], [[3, 2]]), A, T)
    with pytest.raises(InvalidChain):
        chain_weight(HLChain.of([[1]], [[2]]), A, T)


def test_single_vertex_law_matches_weight():
    law, tail = truncated_joint_law(A, T, 1, 1, 1, 1, part_cap=50)
    assert abs(law.pmf[0, 0] - param_convert(a=A, t=T).b2) < 1e-10
    assert tail < 1e-10


def test_tail_bound_shrinks_with_cap():
    tails = [truncated_joint_law(0.5, 0.4, 2, 2, 2, 1, part_cap=c)[1] for c in (1, 2, 4, 8, 16)]
    assert all(x >= y for x, y in zip(tails, tails[1:]))
    assert tails[-1] < tails[0]


@pytest.mark.parametrize("N,M", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_agrees_with_six_vertex_engine(N, M):
    a, t = 0.2, 0.2
    n1, n2 = N, 1
    law, tail = truncated_joint_law(a, t, N, M, n1, n2, part_cap=40)
    exact = exact_joint_height_law(param_convert(a=a, t=t), M, n1, n2)
    assert law.tv_distance(exact) < max(1e-8, tail)
    assert law.total <= 1 + 1e-12 and law.total + tail >= 1 - 1e-15


def test_lengths_bounded_by_step():
    law, _ = truncated_joint_law(0.5, 0.5, 3, 3, 3, 2, part_cap=6)
    assert law.pmf.shape[0] <= 3 and law.pmf.shape[1] <= 4


def test_adaptive_cap():
    law, tail = truncated_joint_law(0.2, 0.3, 2, 2, 2, 1)
    exact = exact_joint_height_law(param_convert(a=0.2, t=0.3), 2, 2, 1)
    assert law.tv_distance(exact) < 1e-9


def test_budget():
    with pytest.raises(BudgetExceeded):
        truncated_joint_law(0.5, 0.5, 3, 3, 3, 2, part_cap=30, max_states=5)


def test_guards():
    with pytest.raises(OutOfRange):
        truncated_joint_law(0.5, 0.5, 1, 1, 2, 1, part_cap=3)
    with pytest.raises(OutOfRange):
        truncated_joint_law(1.5, 0.5, 1, 1, 1, 1, part_cap=3)
