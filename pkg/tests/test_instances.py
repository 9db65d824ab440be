"""Instance generation, parsing, and the frozen generator contract.

The expected supply/demand/cost literals below were derived by hand from
the documented splitmix64 recurrence and the generator recipe, then
cross-checked against an independent inline implementation of the same
recurrence (see test_splitmix_reference_stream).
"""

import numpy as np
import pytest

from formcuts.errors import ParseError, ValidationError
from formcuts.instances import (
    CmstInstance, FctInstance, build_multigraph, bundled_cmst20, generate_fct,
    instance_to_json, load_instance_text, parse_cmst,
)
from formcuts.rng import SplitMix64, round_half_up

MASK = (1 << 64) - 1


def reference_splitmix(seed: int, count: int) -> list[int]:
    # independent transcription of the published recurrence
    out, state = [], seed & MASK
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


def test_splitmix_reference_stream():
    gen = SplitMix64(7)
    assert [gen.next_u64() for _ in range(6)] == reference_splitmix(7, 6)
    gen0 = SplitMix64(0)
    ref0 = reference_splitmix(0, 3)
    assert [gen0.next_u64() for _ in range(3)] == ref0
    # modulo reduction, bottom inclusive
    gen = SplitMix64(123)
    vals = [gen.randint(2, 5) for _ in range(64)]
    assert set(vals) <= {2, 3, 4, 5}
    with pytest.raises(ValueError):
        SplitMix64(1).randint(3, 2)


def test_round_half_up_ties():
    assert round_half_up(0.5) == 1
    assert round_half_up(1.5) == 2
    assert round_half_up(2.5) == 3
    assert round_half_up(-0.5) == 0
    assert round_half_up(2.4) == 2


def test_generator_trace_n1():
    inst = generate_fct(1, 2, 0.75, seed=7)
    assert inst.supply.tolist() == [2]
    assert inst.demand.tolist() == [2]
    assert inst.cost.tolist() == [[47]]
    assert inst.capacity.tolist() == [[2]]
    assert inst.meta == {"B": 2, "r": 0.75, "seed": 7}


def test_generator_trace_n2():
    inst = generate_fct(2, 3, 0.8, seed=5)
    assert inst.supply.tolist() == [3, 2]
    assert inst.demand.tolist() == [2, 2]
    assert inst.cost.tolist() == [[62, 37], [10, 16]]
    assert inst.capacity.tolist() == [[2, 2], [2, 2]]


def test_generator_is_deterministic_and_consistent():
    a = generate_fct(6, 5, 0.9, seed=42)
    b = generate_fct(6, 5, 0.9, seed=42)
    assert np.array_equal(a.supply, b.supply)
    assert np.array_equal(a.cost, b.cost)
    c = generate_fct(6, 5, 0.9, seed=43)
    assert not np.array_equal(a.cost, c.cost)
    # demand repair hits the target total exactly
    target = round_half_up(0.9 * int(a.supply.sum()))
    assert int(a.demand.sum()) == target
    assert np.array_equal(a.capacity, np.minimum.outer(a.supply, a.demand))


def test_generator_parameter_validation():
    with pytest.raises(ValidationError):
        generate_fct(0, 3, 0.9, seed=1)
    with pytest.raises(ValidationError):
        generate_fct(3, 0, 0.9, seed=1)
    with pytest.raises(ValidationError):
        generate_fct(3, 3, 1.0, seed=1)
    # target demand below n cannot keep every demand >= 1
    with pytest.raises(ValidationError):
        generate_fct(8, 1, 0.05, seed=1)


def test_fct_instance_validation():
    ok = generate_fct(2, 3, 0.8, seed=5)
    bad = FctInstance(
        n_suppliers=2, n_customers=2, supply=ok.supply, demand=ok.demand,
        cost=ok.cost, capacity=ok.capacity + 1)
    with pytest.raises(ValidationError):
        bad.validate()
    with pytest.raises(ValidationError):
        FctInstance(n_suppliers=1, n_customers=1,
                    supply=np.array([1]), demand=np.array([2]),
                    cost=np.array([[1]]), capacity=np.array([[1]])).validate()


ORLIB_SAMPLE = "3\n0 3 4 5\n3 0 1 2\n4 1 0 6\n5 2 6 0\n"


def test_orlib_parse_sample():
    inst = parse_cmst(ORLIB_SAMPLE, "orlib", capacity=2)
    assert inst.n == 3 and inst.capacity == 2
    assert inst.demand.tolist() == [0, 1, 1, 1]
    assert inst.cost.tolist() == [[0, 3, 4, 5], [3, 0, 1, 2], [4, 1, 0, 6], [5, 2, 6, 0]]


def test_orlib_trailing_root_is_remapped():
    inst = parse_cmst(ORLIB_SAMPLE + "2\n", "orlib", capacity=2)
    # old vertex 2 becomes the root, order (2, 0, 1, 3)
    assert inst.cost[0].tolist() == [0, 4, 1, 6]
    assert inst.cost.tolist() == np.array(inst.cost).T.tolist()


def test_orlib_one_triangle_is_mirrored():
    text = "2\n0 7 9\n0 0 4\n0 0 0\n"
    inst = parse_cmst(text, "orlib", capacity=1)
    assert inst.cost.tolist() == [[0, 7, 9], [7, 0, 4], [9, 4, 0]]


def test_orlib_parse_errors():
    with pytest.raises(ParseError):
        parse_cmst("", "orlib", capacity=2)
    with pytest.raises(ParseError):
        parse_cmst("3\n0 1 2\n", "orlib", capacity=2)  # truncated matrix
    with pytest.raises(ParseError):
        parse_cmst("2\n0 1 x\n1 0 1\n1 1 0\n", "orlib", capacity=2)
    with pytest.raises(ParseError):
        parse_cmst(ORLIB_SAMPLE + "9\n", "orlib", capacity=2)  # root out of range
    with pytest.raises(ValidationError):
        parse_cmst(ORLIB_SAMPLE, "orlib")  # capacity is mandatory


def test_multigraph_enumeration():
    inst = parse_cmst(ORLIB_SAMPLE, "orlib", capacity=2)
    arcs = build_multigraph(inst)
    # root sends up to C units, every other tail up to C - 1
    assert len(arcs) == 12
    assert (arcs[0].tail, arcs[0].head, arcs[0].size) == (0, 1, 1)
    assert (arcs[-1].tail, arcs[-1].head, arcs[-1].size) == (3, 2, 1)
    assert all(a.head != 0 for a in arcs)
    assert all(a.size <= inst.capacity - inst.demand[a.tail] for a in arcs)


def test_json_instance_round_trip():
    fct = generate_fct(3, 4, 0.85, seed=9)
    back = load_instance_text(instance_to_json(fct))
    assert isinstance(back, FctInstance)
    assert np.array_equal(back.cost, fct.cost)
    assert np.array_equal(back.demand, fct.demand)

    cm = parse_cmst(ORLIB_SAMPLE + "1\n", "orlib", capacity=3)
    back = load_instance_text(instance_to_json(cm))
    assert isinstance(back, CmstInstance)
    assert back.capacity == 3
    assert np.array_equal(back.cost, cm.cost)


def test_bundled_cmst20_fixture():
    inst = bundled_cmst20()
    assert inst.n == 20 and inst.capacity == 5
    assert inst.demand.tolist() == [0] + [1] * 20
    assert inst.cost.shape == (21, 21)
    assert np.array_equal(inst.cost, inst.cost.T)
    assert inst.meta["best_known"] == 226
