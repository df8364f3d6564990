"""Corpus generation: grid enumeration, manifests, determinism, replays."""

import json

import numpy as np
import pytest

from plrlab.corpus import (
    CorpusSpec,
    DEFAULT_INTERFERENCE,
    REPLAY_SPLIT,
    TEST_SPLIT,
    TRAIN_SPLIT,
    generate_corpus,
    grid_points,
    iter_corpus_traces,
    load_manifest,
    point_config,
    replay_scenario,
    trace_filename,
)
from plrlab.errors import ConfigError, SchemaError
from plrlab.features import build_dataset
from plrlab.sim import InterferencePattern, derive_seed, simulate
from plrlab.sim.trace import conservation_counts


def tiny_spec(duration=90.0, seed=42):
    return CorpusSpec(
        node_counts=(2, 4),
        ipi_grid_s=(1.0, 0.5),
        interference_scenarios=(None, InterferencePattern(on_s=0.002, off_s=0.008)),
        per_point_duration_s=duration,
        master_seed=seed,
    )


def test_default_grid_is_seventy_points():
    points = grid_points(CorpusSpec())
    assert len(points) == 70
    assert points[0][1:] == (2, 2.0, None)
    # inner loop is interference, middle is load, outer is node count
    assert points[1][1:3] == (2, 2.0) and points[1][3] is not None
    assert points[2][1:] == (2, 1.0, None)
    assert points[14][1:] == (4, 2.0, None)
    assert [p[0] for p in points] == list(range(70))


def test_empty_grids_rejected():
    with pytest.raises(ConfigError, match="empty grid"):
        CorpusSpec(node_counts=()).validate()
    with pytest.raises(ConfigError, match="empty grid"):
        CorpusSpec(ipi_grid_s=()).validate()
    with pytest.raises(ConfigError, match="empty grid"):
        CorpusSpec(interference_scenarios=()).validate()


def test_spec_dict_roundtrip():
    spec = tiny_spec()
    back = CorpusSpec.from_dict(spec.to_dict())
    assert back == spec
    with pytest.raises(SchemaError):
        CorpusSpec.from_dict({"interference_scenarios": [{"bogus": 1}]})


def test_point_seeds_follow_derivation():
    spec = tiny_spec()
    for index, n, ipi, intf in grid_points(spec):
        cfg = point_config(spec, index, n, ipi, intf, TRAIN_SPLIT)
        assert cfg.seed == derive_seed(42, TRAIN_SPLIT, index)
        assert cfg.num_transmitters == n
        assert cfg.traffic_ipi_s == ipi
        assert cfg.interference == intf
        assert cfg.duration_s == 90.0


def test_train_and_test_seeds_disjoint():
    spec = tiny_spec()
    train = {point_config(spec, *p, TRAIN_SPLIT).seed for p in grid_points(spec)}
    test = {point_config(spec, *p, TEST_SPLIT).seed for p in grid_points(spec)}
    assert not train & test


def test_trace_filenames():
    assert trace_filename(0, 2, 2.0, None) == "trace_000_n02_ipi2_clear.csv"
    assert (
        trace_filename(69, 28, 0.015625, InterferencePattern())
        == "trace_069_n28_ipi0p015625_jam.csv"
    )


def test_generate_corpus_writes_grid_and_manifest(tmp_path):
    spec = tiny_spec()
    manifest = generate_corpus(spec, tmp_path / "train", split=TRAIN_SPLIT)
    assert manifest["split"] == "train"
    assert len(manifest["traces"]) == 8
    on_disk = load_manifest(tmp_path / "train")
    assert on_disk == manifest
    import hashlib

    for entry in manifest["traces"]:
        data = (tmp_path / "train" / entry["file"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
        assert entry["seed"] == entry["config"]["seed"]
        lines = data.decode().splitlines()
        assert len(lines) - 1 == entry["num_events"]


def test_generate_corpus_deterministic(tmp_path):
    spec = tiny_spec(duration=60.0)
    m1 = generate_corpus(spec, tmp_path / "a", split=TRAIN_SPLIT)
    m2 = generate_corpus(spec, tmp_path / "b", split=TRAIN_SPLIT)
    assert m1 == m2
    for entry in m1["traces"]:
        assert (tmp_path / "a" / entry["file"]).read_bytes() == (
            tmp_path / "b" / entry["file"]
        ).read_bytes()


def test_generate_corpus_parallel_matches_serial(tmp_path):
    spec = tiny_spec(duration=60.0)
    serial = generate_corpus(spec, tmp_path / "s", split=TEST_SPLIT, workers=0)
    parallel = generate_corpus(spec, tmp_path / "p", split=TEST_SPLIT, workers=2)
    assert serial == parallel


def test_iter_corpus_traces_order_and_configs(tmp_path):
    spec = tiny_spec(duration=60.0)
    manifest = generate_corpus(spec, tmp_path, split=TRAIN_SPLIT)
    traces = list(iter_corpus_traces(tmp_path))
    assert len(traces) == 8
    for trace, entry in zip(traces, manifest["traces"]):
        assert trace.config is not None
        assert trace.config.seed == entry["seed"]
        assert len(trace.time_s) == entry["num_events"]
        for node_counts in conservation_counts(trace).values():
            assert node_counts["gen"] == (
                node_counts["rx_ok"]
                + node_counts["drop_csma"]
                + node_counts["drop_retry"]
            )


def test_load_manifest_errors(tmp_path):
    with pytest.raises(SchemaError):
        load_manifest(tmp_path)  # no manifest.json
    (tmp_path / "manifest.json").write_text("{broken")
    with pytest.raises(SchemaError):
        load_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text(json.dumps({"schema_version": "9"}))
    with pytest.raises(SchemaError):
        load_manifest(tmp_path)


def test_replay_scenarios():
    benign = replay_scenario("benign", master_seed=42)
    jam = replay_scenario("jam-mid-run", master_seed=42)
    assert benign.interference is None
    assert jam.interference is not None
    # duty cycle deliberately matches the training grid's interferer
    assert jam.interference.on_s == DEFAULT_INTERFERENCE[1].on_s
    assert jam.interference.off_s == DEFAULT_INTERFERENCE[1].off_s
    assert jam.interference.start_s == pytest.approx(jam.duration_s / 2)
    assert benign.seed != jam.seed
    assert benign.seed == derive_seed(42, REPLAY_SPLIT, 0)
    with pytest.raises(ConfigError):
        replay_scenario("mystery")


def test_jam_mid_run_plr_profile():
    # loss must sit below the switch threshold before the jam and clearly
    # above it once the interferer starts
    cfg = replay_scenario("jam-mid-run", master_seed=42, duration_s=300.0)
    ds = build_dataset(simulate(cfg), 30.0)
    labels = ds.labels()
    starts = np.asarray(ds.window_starts())
    pre = labels[starts < 150.0]
    post = labels[starts >= 150.0]
    assert np.all(pre < 0.2)
    assert np.all(post > 0.3)


def test_benign_plr_profile():
    cfg = replay_scenario("benign", master_seed=42, duration_s=300.0)
    ds = build_dataset(simulate(cfg), 30.0)
    assert np.all(ds.labels() < 0.05)
