import pytest

from qrepeater.config import SimConfig, config_from_dict, load_config, parse_config
from qrepeater.errors import ParseError
from qrepeater.scheduling import SchedulerKind

MINIMAL = """
hops = 4
qubits_per_station = 20
scheduler = "greedy_bottom_up"
"""


def test_minimal_defaults():
    c = parse_config(MINIMAL)
    assert (c.link_length_km, c.loss_db_per_km, c.speed_fraction) == (20.0, 0.17, 0.7)
    assert c.target_fidelity == 0.98 and c.target_pairs == 200
    assert c.gate_error == 0.0
    assert c.thresholds == (0.98, 0.98, 0.98)
    assert c.scheduler == SchedulerKind("greedy_bottom_up")


def test_banded_table():
    c = parse_config(MINIMAL.replace('scheduler = "greedy_bottom_up"', "") + "[scheduler]\nkind = 'banded'\nboundaries = [0.66]\n")
    assert c.scheduler == SchedulerKind.banded([0.66])


def test_symmetric_tolerance():
    c = parse_config(MINIMAL.replace('"greedy_bottom_up"', '{ kind = "symmetric", tolerance = 0.01 }'))
    assert c.scheduler.tolerance == 0.01


def test_full_document(tmp_path):
    text = """
hops = 8
qubits_per_station = 40
scheduler = { kind = "banded", boundaries = [0.8, 0.9] }
link_length_km = 10
thresholds = [0.9, 0.95, 0.97, 0.98]
target_pairs = 50
seed = 9
max_sim_time = 3.5
stall_slots = 1000

[link_overrides]
state_model = "werner"
"""
    path = tmp_path / "c.toml"
    path.write_text(text)
    c = load_config(path)
    assert c.hops == 8 and c.link_length_km == 10.0
    assert c.thresholds == (0.9, 0.95, 0.97, 0.98)
    assert c.link_overrides == {"state_model": "werner"}
    assert c.stall_slots == 1000
    assert config_from_dict(c.to_dict()) == c


@pytest.mark.parametrize(
    "extra,key",
    [
        ('scheduler = { kind = "banded", boundaries = [0.8, 0.7] }', "scheduler"),
        ('scheduler = { kind = "banded", boundaries = ["x"] }', "scheduler.boundaries[0]"),
        ('scheduler = { kind = "greedy_bottom_up", boundaries = [0.7] }', "scheduler.boundaries"),
        ('scheduler = "best"', "scheduler"),
        ("scheduler = 3", "scheduler"),
    ],
)
def test_scheduler_errors(extra, key):
    text = MINIMAL.replace('scheduler = "greedy_bottom_up"', extra)
    with pytest.raises(ParseError) as err:
        parse_config(text)
    assert err.value.key_path == key


@pytest.mark.parametrize(
    "extra,key",
    [
        ("hopz = 3", "hopz"),
        ('target_pairs = "many"', "target_pairs"),
        ("target_fidelity = true", "target_fidelity"),
        ("thresholds = 0.9", "thresholds"),
        ("seed = -1", "seed"),
        ("[link_overrides]\nfoo = 1", "link_overrides.foo"),
        ("[link_overrides]\np_success = 'high'", "link_overrides.p_success"),
    ],
)
def test_field_errors(extra, key):
    with pytest.raises(ParseError) as err:
        parse_config(MINIMAL + extra + "\n")
    assert err.value.key_path == key


@pytest.mark.parametrize("missing", ["hops", "qubits_per_station", "scheduler"])
def test_missing_required(missing):
    lines = [l for l in MINIMAL.strip().splitlines() if not l.startswith(missing + " ")]
    with pytest.raises(ParseError) as err:
        parse_config("\n".join(lines))
    assert err.value.key_path == missing


def test_malformed():
    with pytest.raises(ParseError):
        parse_config("hops = = 4")


def test_replace_keeps_uniform_schedule():
    c = SimConfig(hops=4, qubits_per_station=20, scheduler=SchedulerKind("greedy_bottom_up"))
    assert c.replace(hops=16).thresholds == (0.98,) * 5
    assert c.replace(target_fidelity=0.95).thresholds == (0.98, 0.98, 0.95)
