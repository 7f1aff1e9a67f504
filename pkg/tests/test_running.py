import io
import math

import numpy as np
import pytest

from oracles import gap_sum_identity, phi_enum, phi_reversed_enum, pi_ap_enum, walk_position
from primerun.errors import ArgumentError
from primerun.primes import ResidueClass
from primerun.running import (
    DEFAULT_DIRECTIONS,
    RunningScan,
    boundary_term,
    geometric_grid,
    iter_gaps,
    parse_direction_map,
    race,
    race_series,
    rescaled_bias,
    reversed_running_table,
    run_path,
    running_table,
    running_value,
    walk_path,
)


def test_phi_at_10_mod_3():
    t = running_table(10, 3, [10])
    assert t.phi.tolist() == [[3, 4, 3]]


def test_reversed_at_10_mod_3_matches_enumeration():
    t = reversed_running_table(10, 3, [10])
    assert t.phi[0].tolist() == phi_reversed_enum(10, 3) == [1, 2, 7]


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6, 10, 12, 30])
def test_against_per_n_enumeration(d):
    cps = [1, 2, 3, 10, 97, 1000, 4099, 20000]
    t = running_table(20000, d, cps, segment_size=256)
    for x, row in zip(cps, t.phi.tolist()):
        assert row == phi_enum(x, d)


@pytest.mark.parametrize("d", [3, 4, 7])
def test_reversed_against_enumeration(d):
    cps = [1, 2, 5, 100, 5000]
    t = reversed_running_table(5000, d, cps, segment_size=128)
    for x, row in zip(cps, t.phi.tolist()):
        assert row == phi_reversed_enum(x, d)
        assert sum(row) == x


def test_gap_sum_identity_up_to_1e5():
    cps = [1, 2, 7, 30, 1000, 65536, 99991, 100000]
    for d in (3, 5, 8):
        t = running_table(100000, d, cps)
        for x, row in zip(cps, t.phi.tolist()):
            assert row == [gap_sum_identity(x, d, a) for a in range(d)]
    assert running_table(100000, 7, [100000]).phi[0].tolist() == phi_enum(100000, 7)


def test_conservation_and_monotone_rows():
    t = running_table(10**6, 7, geometric_grid(10**6, 50))
    assert (t.phi.sum(axis=1) == np.array(t.checkpoints)).all()
    assert (np.diff(t.phi, axis=0) >= 0).all()


def test_nonreduced_classes_stabilize():
    t = running_table(10**5, 6, [2, 4, 100, 10**5])
    assert t.column(2).tolist() == [1, 1, 1, 1]
    assert t.column(3).tolist() == [0, 2, 2, 2]
    assert t.column(4).tolist() == [0, 0, 0, 0]


def test_segment_size_and_threads_do_not_change_output():
    cps = geometric_grid(3 * 10**6, 30)
    a = running_table(3 * 10**6, 5, cps)
    b = running_table(3 * 10**6, 5, cps, segment_size=1 << 12, threads=3)
    assert np.array_equal(a.phi, b.phi)


def test_scan_resumes_from_state():
    cps = [100, 5000, 70000, 200000]
    scan = RunningScan(200000, 4, cps)
    gaps = iter_gaps(200000, segment_size=1 << 12)
    for _ in range(10):
        scan.feed(*next(gaps))
    saved = scan.state()
    resumed = RunningScan(200000, 4, cps)
    resumed.restore(saved)
    for item in iter_gaps(200000, start=resumed.next_lo, prev=resumed.prev, segment_size=1 << 12):
        resumed.feed(*item)
    assert resumed.table().phi.tolist() == running_table(200000, 4, cps).phi.tolist()


def test_checkpoint_errors():
    with pytest.raises(ArgumentError):
        running_table(100, 3, [])
    with pytest.raises(ArgumentError):
        running_table(100, 3, [50, 20])
    with pytest.raises(ArgumentError):
        running_table(100, 3, [200])
    with pytest.raises(ArgumentError):
        running_table(100, 1, [10])


def test_csv_layout():
    text = running_table(10, 3, [7, 10]).to_csv()
    assert text == "x,a0,a1,a2\n7,3,1,3\n10,3,4,3\n"


@pytest.mark.parametrize(
    "x,d,a,expected",
    [(10, 3, 1, 4), (10, 3, 2, 0), (7, 3, 1, 1), (1, 3, 0, 1), (2, 3, 2, 1), (2, 3, 0, 0)],
)
def test_boundary_term(x, d, a, expected):
    assert boundary_term(x, ResidueClass(d, a)) == expected


def test_rescaled_bias_definition():
    x = 10**5
    cls = ResidueClass(3, 1)
    phi = phi_enum(x, 3)[1]
    assert rescaled_bias(x, cls) == pytest.approx((phi - x / 2) * math.log(x) / x, rel=1e-12)
    with pytest.raises(ArgumentError):
        rescaled_bias(x, ResidueClass(3, 0))
    with pytest.raises(ArgumentError):
        rescaled_bias(2, cls)


def test_table_rescaled_bias_marks_tiny_x():
    residues, r = running_table(100, 4, [2, 100]).rescaled_bias()
    assert residues == [1, 3]
    assert np.isnan(r[0]).all() and np.isfinite(r[1]).all()


def test_race():
    assert race(10, 3, 1, 2) == 1
    assert race(1000, 5, 2, 2) == 0
    assert race(5000, 5, 1, 3) == -race(5000, 5, 3, 1)
    with pytest.raises(ArgumentError):
        race(10, 4, 1, 2)
    t = running_table(1000, 4, [10, 1000])
    assert race_series(t, 1, 3).tolist() == [race(10, 4, 1, 3), race(1000, 4, 1, 3)]


def test_running_value():
    assert running_value(10, ResidueClass(3, 1)) == 4


def test_geometric_grid():
    g = geometric_grid(10**6, 200)
    assert len(g) == 200 and g[0] == 10 and g[-1] == 10**6
    assert all(b > a for a, b in zip(g, g[1:]))
    assert geometric_grid(15, 200) == list(range(10, 16))


# --- lattice paths ----------------------------------------------------------


def test_walk_to_10():
    p = walk_path(10)
    assert p.final == (-2, 1)
    assert p.at(1) == (0, 0)


def test_walk_matches_pi_differences_to_1e4():
    p = walk_path(10**4)
    for n in (1, 2, 3, 10, 11, 97, 1000, 5003, 10**4):
        expected = (
            pi_ap_enum(n, 5, 4) - pi_ap_enum(n, 5, 2),
            pi_ap_enum(n, 5, 3) - pi_ap_enum(n, 5, 1),
        )
        assert p.at(n) == expected


def test_run_matches_phi_differences_to_1e4():
    n_max = 10**4
    p = run_path(n_max)
    t = running_table(n_max, 5, list(range(1, n_max + 1)))
    phi = t.phi
    expected = np.stack([phi[:, 4] - phi[:, 2], phi[:, 3] - phi[:, 1]], axis=1)
    assert np.array_equal(p.xy, expected)
    assert p.at(1) == (0, 0)


def test_run_steps_are_unit_or_stalled():
    p = run_path(3000)
    step = np.abs(np.diff(p.xy, axis=0)).sum(axis=1)
    assert set(step.tolist()) <= {0, 1}
    # the run only stalls in the gap [5, 7), whose floor 5 is sieved out mod 5
    stalls = p.n[1:][step == 0].tolist()
    assert stalls == [5, 6]


def test_stride_and_max_distance():
    full = run_path(5000)
    strided = run_path(5000, stride=100)
    assert strided.n.tolist() == list(range(100, 5001, 100))
    assert np.array_equal(strided.xy, full.xy[99::100])
    assert strided.max_distance == full.max_distance
    assert full.max_distance == pytest.approx(np.sqrt((full.xy**2).sum(axis=1)).max())
    w = walk_path(5000, stride=7)
    assert w.max_distance == pytest.approx(np.sqrt((walk_path(5000).xy ** 2).sum(axis=1)).max())


def test_custom_direction_map():
    m = {1: (0, 1), 2: (1, 0)}
    p = walk_path(500, d=3, direction_map=m)
    assert p.final == walk_position(500, m, d=3)


def test_direction_map_errors():
    with pytest.raises(ArgumentError):
        walk_path(10, direction_map={1: (0, 1), 2: (0, 1), 3: (1, 0), 4: (-1, 0)})
    with pytest.raises(ArgumentError):
        walk_path(10, direction_map={1: (2, 0), 2: (0, 1), 3: (1, 0), 4: (-1, 0)})
    with pytest.raises(ArgumentError):
        walk_path(10, direction_map={1: (0, 1)})
    with pytest.raises(ArgumentError):
        run_path(10, d=6, direction_map={1: (0, 1), 2: (1, 0), 5: (0, -1)})
    with pytest.raises(ArgumentError):
        parse_direction_map("1:sideways")
    with pytest.raises(ArgumentError):
        parse_direction_map("1:up,1:down")


def test_parse_direction_map_default():
    assert parse_direction_map("1:down,2:left,3:up,4:right") == DEFAULT_DIRECTIONS


def test_path_csv():
    buf = io.StringIO()
    walk_path(3).to_csv(buf)
    assert buf.getvalue() == "n,x,y\n1,0,0\n2,-1,0\n3,-1,1\n"
