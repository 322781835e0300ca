import numpy as np
import pytest

from archattr.attributes import AttributeTable, extract_attributes
from archattr.errors import ConfigError, GenerationExhausted
from archattr.graph import parse_network, serialize_network
from archattr.popgen import (
    GenConfig,
    PlantSpec,
    estimate_bayes_rate,
    generate_population,
    planted_accuracy,
    sample_architecture,
)

SMALL = GenConfig(population_size=40, layers_min=1, layers_max=4,
                  input_height=48, input_width=48, input_channels=1)


class TestSampling:
    def test_fixed_length_single_chain(self):
        cfg = GenConfig(input_topology="single", output_topology="single",
                        layers_min=3, layers_max=3, act_none=1.0, act_relu=0.0,
                        act_sigmoid=0.0, ip_layers_min=1, ip_layers_max=1,
                        conv_weight=1.0, pool_weight=0.0,
                        input_height=64, input_width=64, input_channels=1)
        for i in range(10):
            g = sample_architecture(cfg, i)
            kinds = [l.kind for l in g.layers]
            assert kinds == ["Input"] + ["Convolution"] * 3 + ["InnerProduct", "Output"]

    def test_three_view_topology(self):
        g = sample_architecture(GenConfig(output_topology="dual"), 0)
        assert len(g.inputs()) == 3
        assert 1 <= len(g.outputs()) <= 2
        assert any(l.kind == "Concat" for l in g.layers)

    def test_deterministic_per_seed_index(self):
        a = sample_architecture(SMALL, 5)
        b = sample_architecture(SMALL, 5)
        assert a == b
        assert sample_architecture(SMALL, 6) != a

    def test_every_sample_parses_and_infers(self):
        from archattr.shapes import infer_shapes
        for i in range(300):
            g = sample_architecture(SMALL, i)
            reparsed = parse_network(serialize_network(g))
            assert reparsed == g
            infer_shapes(g)

    def test_exhaustion_on_infeasible_config(self):
        bad = GenConfig(input_height=4, input_width=4, input_channels=1,
                        kernel_sizes=(9,), layers_min=2, layers_max=3,
                        view_stack_min=1, view_stack_max=1)
        with pytest.raises(GenerationExhausted):
            sample_architecture(bad, 0)

    def test_bad_config_values(self):
        with pytest.raises(ConfigError):
            GenConfig(layers_min=5, layers_max=2)
        with pytest.raises(ConfigError):
            GenConfig(input_topology="five-view")
        with pytest.raises(ConfigError):
            GenConfig(conv_weight=0.0, pool_weight=0.0)


class TestPlant:
    def _table(self, n=60):
        rows = [extract_attributes(sample_architecture(SMALL, i), f"net_{i:05d}")
                for i in range(n)]
        return AttributeTable(rows)

    def test_zero_weights_logistic_center(self):
        table = self._table(20)
        plant = PlantSpec(signal={"num_conv_layers": 0.0}, noise_std=0.0,
                          broken_prob=0.0).with_stats(table)
        for i, row in enumerate(table.rows):
            assert planted_accuracy(row, plant, (1, i)) == 0.5

    def test_all_broken(self):
        table = self._table(20)
        plant = PlantSpec(broken_prob=1.0, broken_low=0.0, broken_high=0.05).with_stats(table)
        accs = [planted_accuracy(r, plant, (2, i)) for i, r in enumerate(table.rows)]
        assert all(0.0 <= a <= 0.05 for a in accs)

    def test_unknown_signal_feature(self):
        with pytest.raises(ConfigError):
            PlantSpec(signal={"not_an_attribute": 1.0})

    def test_kv_round_trip(self):
        pairs = {"signal_features": "num_relu:0.5,avg_stride_h:-0.25",
                 "link": "linear-clipped", "noise_std": "0.05",
                 "broken_prob": "0.2", "broken_low": "0", "broken_high": "0.1"}
        plant = PlantSpec.from_kv(pairs)
        assert plant.signal == {"num_relu": 0.5, "avg_stride_h": -0.25}
        assert plant.link == "linear-clipped"

    def test_bayes_rate_sane(self):
        table = self._table(200)
        plant = PlantSpec().with_stats(table)
        rate = estimate_bayes_rate(table, plant, threshold=0.38)
        assert 0.5 < rate <= 1.0


class TestGeneratePopulation:
    def test_files_plus_csvs(self, tmp_path):
        table = generate_population(SMALL, PlantSpec(), tmp_path, n=25)
        files = sorted((tmp_path / "networks").glob("*.prototxt"))
        assert len(files) == len(table) == 25
        assert (tmp_path / "attributes.csv").exists()
        assert (tmp_path / "accuracies.csv").exists()
        assert (tmp_path / "generation.json").exists()

    def test_round_trip_extraction_identical(self, tmp_path):
        generate_population(SMALL, PlantSpec(), tmp_path, n=25)
        want = (tmp_path / "attributes.csv").read_text()
        rows = []
        accs = dict(
            line.split(",") for line in
            (tmp_path / "accuracies.csv").read_text().splitlines()[1:]
        )
        for f in sorted((tmp_path / "networks").glob("*.prototxt")):
            g = parse_network(f.read_text())
            rows.append(extract_attributes(g, f.stem, float(accs[f.stem])))
        assert AttributeTable(rows).to_csv(include_accuracy=True) == want

    def test_regeneration_byte_identical(self, tmp_path):
        generate_population(SMALL, PlantSpec(), tmp_path / "a", n=15)
        generate_population(SMALL, PlantSpec(), tmp_path / "b", n=15)
        for name in ("attributes.csv", "accuracies.csv", "generation.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_no_constant_attribute_in_default_population(self, tmp_path):
        table = generate_population(GenConfig(), PlantSpec(), tmp_path, n=300)
        X = np.array([r.as_row() for r in table.rows])
        assert np.all(X.std(axis=0) > 0)
