import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eafjsp.instance import (
    BENCHMARKS,
    EnrichmentConfig,
    Instance,
    InstanceError,
    MarketError,
    MarketSeries,
    Operation,
    assign_worker_demands,
    benchmark_path,
    enrich,
    instance_from_dict,
    instance_to_dict,
    load_enrichment,
    load_instance,
    load_market,
    parse_fjs,
    serialize_fjs,
    synth_market,
    worker_demand,
)

SMALL = """2 3 1.5
2 2 1 3 2 4 1 3 2
1 1 2 5
"""


def test_parse_small():
    inst = parse_fjs(SMALL, name="small")
    assert inst.n_jobs == 2
    assert inst.n_machines == 3
    assert inst.n_operations == 3
    assert inst.jobs[0][0].eligible == ((0, 3), (1, 4))
    assert inst.jobs[0][1].eligible == ((2, 2),)
    assert inst.jobs[1][0].eligible == ((1, 5),)
    # horizon is the sum of longest alternatives
    assert inst.horizon == 4 + 2 + 5


def test_header_without_flexibility_token():
    inst = parse_fjs("1 1\n1 1 1 2\n")
    assert inst.n_operations == 1
    assert inst.horizon == 2


@pytest.mark.parametrize(
    "text, line",
    [
        ("", 1),
        ("x 2\n1 1 1 1\n", 1),
        ("2 2\n1 1 1 1\n", 2),
        ("1 2\n1 1 3 1\n", 2),
        ("1 2\n1 1 1 0\n", 2),
        ("1 2\n2 1 1 1\n", 2),
        ("1 2\n1 1 1 1 7\n", 2),
        ("1 2\n1 1 1 a\n", 2),
        ("1 2\n1 1 1 1\n1 1 1 1\n", 3),
    ],
)
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(InstanceError, match=f"line {line}"):
        parse_fjs(text)


def test_roundtrip_fjs():
    inst = parse_fjs(SMALL)
    again = parse_fjs(serialize_fjs(inst))
    assert again.jobs == inst.jobs
    assert again.n_machines == inst.n_machines


@pytest.mark.parametrize("name", BENCHMARKS)
def test_bundled_benchmarks_roundtrip(name):
    inst = load_instance(benchmark_path(name))
    assert parse_fjs(serialize_fjs(inst)).jobs == parse_fjs(benchmark_path(name).read_text()).jobs
    assert instance_from_dict(instance_to_dict(inst)) == inst


def test_json_roundtrip_keeps_demands(tmp_path):
    inst = load_instance(benchmark_path("mk01"))
    path = tmp_path / "mk01.json"
    import json

    path.write_text(json.dumps(instance_to_dict(inst)))
    assert load_instance(path) == inst


def test_unknown_benchmark():
    with pytest.raises(FileNotFoundError):
        benchmark_path("mk99")


def test_instance_rejects_short_horizon():
    op = Operation(0, 1, ((0, 3),))
    with pytest.raises(InstanceError):
        Instance(((op,),), n_machines=1, horizon=2)


def test_operation_validation():
    with pytest.raises(InstanceError):
        Operation(0, 1, ())
    with pytest.raises(InstanceError):
        Operation(0, 1, ((0, 0),))
    with pytest.raises(InstanceError):
        Operation(0, 1, ((0, 1),), worker_demand=0)


@pytest.mark.parametrize("i, j, expected", [(1, 1, 2), (1, 2, 1), (2, 1, 2), (3, 3, 4), (4, 1, 1), (5, 3, 2), (7, 6, 3)])
def test_worker_demand_hand_values(i, j, expected):
    # j mod (i mod 4 + 1) + 1
    assert worker_demand(i, j) == expected


@given(st.integers(1, 500), st.integers(1, 500))
def test_worker_demand_range(i, j):
    assert 1 <= worker_demand(i, j) <= 4


def test_assign_worker_demands_uses_one_based_indices():
    inst = assign_worker_demands(parse_fjs(SMALL))
    got = [op.worker_demand for op in inst.operations]
    assert got == [worker_demand(1, 1), worker_demand(1, 2), worker_demand(2, 1)]


def test_enrich_is_seeded():
    base = parse_fjs(SMALL)
    a = enrich(base, EnrichmentConfig(seed=3))
    b = enrich(base, EnrichmentConfig(seed=3))
    c = enrich(base, EnrichmentConfig(seed=4))
    assert a == b
    assert [op.energy_demand for op in a.operations] != [op.energy_demand for op in c.operations]
    assert all(1 <= op.energy_demand <= 5 for op in a.operations)


def test_load_market_holds_values_until_next_row():
    text = "t,price,emission\n0,1.5,2\n3,4,1\n"
    market = load_market(text, 6)
    np.testing.assert_array_equal(market.price, [1.5, 1.5, 1.5, 4, 1.5, 1.5])
    np.testing.assert_array_equal(market.emission, [2, 2, 2, 1, 2, 2])


def test_load_market_truncates():
    text = "t,price,emission\n" + "".join(f"{t},{t},{t}\n" for t in range(10))
    assert len(load_market(text, 4)) == 4


@pytest.mark.parametrize(
    "text",
    [
        "",
        "t,price\n0,1\n",
        "t,price,emission\n",
        "t,price,emission\n1,1,1\n",
        "t,price,emission\n0,1,1\n0,2,2\n",
        "t,price,emission\n0,-1,1\n",
        "t,price,emission\n0,x,1\n",
        "t,price,emission\n0,nan,1\n",
    ],
)
def test_load_market_errors(text):
    with pytest.raises(MarketError):
        load_market(text, 5)


def test_market_series_validation():
    with pytest.raises(MarketError):
        MarketSeries([1, 2], [1])
    with pytest.raises(MarketError):
        MarketSeries([], [])
    series = MarketSeries([1, 2], [3, 4])
    with pytest.raises(ValueError):
        series.price[0] = 5


def test_market_csv_roundtrip():
    market = synth_market(12, seed=5)
    assert load_market(market.to_csv(), 12) == market


@pytest.mark.parametrize("seed", range(32))
def test_synth_market_is_deterministic(seed):
    a = synth_market(16, seed)
    b = synth_market(16, seed)
    assert a == b
    assert len(a) == 16
    assert a.price.min() >= 1 and a.price.max() <= 10


def test_synth_market_seeds_differ():
    series = {tuple(synth_market(8, seed).price) for seed in range(32)}
    assert len(series) == 32


def test_load_enrichment(tmp_path):
    path = tmp_path / "enrich.ini"
    path.write_text("seed = 9\nprice_range = 2, 3\nblock_length = 1\n")
    cfg = load_enrichment(path)
    assert cfg.seed == 9
    assert cfg.price_range == (2.0, 3.0)
    assert cfg.block_length == 1
    market = synth_market(5, 0, cfg)
    assert np.all((market.price >= 2) & (market.price <= 3))
