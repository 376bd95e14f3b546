"""Config and domain-type invariants."""

import pytest

from offloadsim.core import (Assignment, ConfigError, ExperimentConfig,
                             SystemConfig, Tier, default_config, validate_config,
                             validate_servers)
from offloadsim.simulator import sample_environment


def make_system(**overrides):
    base = dict(num_edge=4, num_cloud=6, num_clients=5, num_task_types=3,
                horizon=100, tradeoff_v=50.0, accuracy_weight=1.0,
                min_rate=1.0, rng_seed=0)
    base.update(overrides)
    return SystemConfig(**base)


class TestValidateConfig:
    def test_valid_config_passes(self):
        assert validate_config(make_system()) == []

    def test_zero_horizon(self):
        errors = validate_config(make_system(horizon=0))
        assert any("horizon" in e for e in errors)

    def test_no_servers(self):
        errors = validate_config(make_system(num_edge=0, num_cloud=0))
        assert any("server" in e for e in errors)

    def test_negative_v(self):
        errors = validate_config(make_system(tradeoff_v=-1.0))
        assert any("V" in e for e in errors)

    def test_zero_slot_duration(self):
        errors = validate_config(make_system(slot_duration=0.0))
        assert any("slot duration" in e for e in errors)

    def test_zero_capacity_server(self):
        env = sample_environment(default_config(seed=0))
        env.servers[0].capacity = 0.0
        errors = validate_servers(env.servers)
        assert any("capacity must be positive" in e for e in errors)


class TestConfigRoundTrip:
    def test_serialize_parse_serialize_is_identity(self):
        config = default_config(seed=7)
        text = config.to_json()
        reparsed = ExperimentConfig.from_json(text)
        assert reparsed.to_json() == text

    def test_round_trip_with_overrides(self):
        config = default_config(seed=3, tradeoff_v=123.5, policy="greedy-delay",
                                arrival_rate=0.625)
        text = config.to_json()
        assert ExperimentConfig.from_json(text).to_json() == text

    def test_bad_schema_version(self):
        doc = default_config().to_dict()
        doc["schema_version"] = 99
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(doc)

    def test_missing_system_field(self):
        doc = default_config().to_dict()
        del doc["system"]["horizon"]
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(doc)

    def test_invalid_json(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("{not json")

    def test_replace_rejects_unknown_field(self):
        with pytest.raises(KeyError):
            default_config().replace(no_such_field=1)


class TestServerIndexConvention:
    def test_edge_then_cloud_one_based(self):
        config = default_config(seed=5)
        env = sample_environment(config)
        n = config.system.num_edge
        assert [s.id for s in env.servers] == list(range(1, config.system.num_servers + 1))
        for s in env.servers:
            assert s.tier == (Tier.EDGE if s.id <= n else Tier.CLOUD)

    def test_environment_sampling_deterministic(self):
        config = default_config(seed=11)
        a, b = sample_environment(config), sample_environment(config)
        assert [s.capacity for s in a.servers] == [s.capacity for s in b.servers]
        assert (a.eta == b.eta).all()


class TestAssignment:
    def test_placed_and_dropped_disjoint(self):
        a = Assignment(server_of={1: 2}, dropped={1})
        with pytest.raises(ValueError):
            a.check([1])

    def test_unplaced_task_rejected(self):
        a = Assignment()
        with pytest.raises(ValueError):
            a.check([1])

    def test_valid_assignment(self):
        a = Assignment(server_of={1: 2}, dropped={3})
        a.check([1, 3])
