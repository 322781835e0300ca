import numpy as np
import pytest

from archattr.attributes import (
    ATTRIBUTE_NAMES,
    AttributeTable,
    average_depth,
    consecutive_conv_pairs,
    extract_attributes,
    grid_reductions,
    kernel_shape_props,
    layer_counts,
    layer_mean_depths,
    ratio_attributes,
    succession_props,
    total_reduction_pairs,
)
from archattr.graph import LayerSpec, NetworkGraph, build_graph
from archattr.shapes import infer_shapes
from helpers import chain, concat, conv, graph, inp, ip, outp, pool, relu, sigmoid, random_valid_graph
from oracles import conv_pairs_from_paths, mean_depth_to_layer, mean_path_length


class TestAverageDepth:
    def test_linear_chain(self):
        g = chain(inp("d", 8, 8, 1), relu("r1"), relu("r2"), relu("r3"), relu("r4"), outp())
        assert average_depth(g) == 6.0

    def test_two_paths_of_different_length(self):
        # lengths 4 and 6 through the same output
        layers = [inp("d", 8, 8, 1), conv("a", 1, 1, f=2), relu("r"), conv("b", 1, 1, f=2),
                  concat("cat"), outp()]
        bottoms = [[], [0], [1], [2], [1, 3], [4]]
        g = graph(layers, bottoms)
        assert average_depth(g) == 5.0

    def test_matches_path_enumeration_oracle(self):
        rng = np.random.default_rng(90)
        for _ in range(200):
            g = random_valid_graph(rng)
            assert average_depth(g) == pytest.approx(mean_path_length(g), abs=1e-12)

    def test_per_layer_depths_match_oracle(self):
        rng = np.random.default_rng(91)
        for _ in range(100):
            g = random_valid_graph(rng)
            depths = layer_mean_depths(g)
            for i in range(len(g.layers)):
                assert depths[i] == pytest.approx(mean_depth_to_layer(g, i), abs=1e-12)


class TestLayerCounts:
    def test_lenet_style_counts(self):
        g = chain(inp("d", 28, 28, 1), conv("c1", 5, 5, f=6), pool("p1"),
                  conv("c2", 5, 5, f=16), ip("fc", 120), outp())
        values, undefined = layer_counts(g, infer_shapes(g))
        assert values["num_conv_layers"] == 2
        assert values["num_conv_features"] == 11.0
        assert values["avg_IP_neurons"] == 120.0
        # c2 output is 8x8x16 = 1024 flattened inputs
        assert values["avg_IP_weights"] == 1024 * 120
        assert undefined == set()

    def test_no_ip_layers_flagged_undefined(self):
        g = chain(inp("d", 8, 8, 1), conv("c", 3, 3, f=2), outp())
        values, undefined = layer_counts(g, infer_shapes(g))
        assert values["avg_IP_neurons"] == 0.0
        assert {"avg_IP_neurons", "avg_IP_weights"} <= undefined

    def test_activation_counts_require_conv_predecessor(self):
        g = chain(inp("d", 8, 8, 1), conv("c1", 3, 3, f=2), relu("r1"),
                  conv("c2", 3, 3, f=2), sigmoid("s1"), ip("fc", 4), relu("r2"), outp())
        values, _ = layer_counts(g, infer_shapes(g))
        assert values["num_relu"] == 1  # r2 follows an InnerProduct, not counted
        assert values["num_sigmoid"] == 1


class TestSuccession:
    def test_direct_succession(self):
        g = chain(inp("d", 28, 28, 1), conv("c1", 3, 3, f=2), pool("p1"),
                  conv("c2", 3, 3, f=2), ip("fc", 4), outp())
        values, _ = succession_props(g)
        assert values["prop_conv_into_pool"] == 0.5

    def test_activation_is_skipped(self):
        g = chain(inp("d", 28, 28, 1), conv("c1", 3, 3, f=2), relu("r"), pool("p1"), outp())
        values, _ = succession_props(g)
        assert values["prop_conv_into_pool"] == 1.0

    def test_pool_into_pool(self):
        g = chain(inp("d", 28, 28, 1), pool("p1"), pool("p2"), conv("c", 3, 3, f=2), outp())
        values, _ = succession_props(g)
        assert values["prop_pool_into_pool"] == 0.5


class TestKernelShapes:
    def test_square_and_horizontal(self):
        g = chain(inp("d", 28, 28, 1), conv("a", 3, 3, f=2), conv("b", 1, 3, f=2), outp())
        values, _ = kernel_shape_props(g)
        assert values["prop_square_kernels"] == 0.5
        assert values["prop_horiz_kernels"] == 0.5
        assert values["prop_vert_kernels"] == 0.0

    def test_1x1_is_also_square(self):
        g = chain(inp("d", 28, 28, 1), conv("a", 1, 1, f=2), outp())
        values, _ = kernel_shape_props(g)
        assert values["prop_1x1_kernels"] == 1.0
        assert values["prop_square_kernels"] == 1.0

    def test_nonoverlap_and_stride_means(self):
        g = chain(inp("d", 28, 28, 1), conv("a", 2, 2, 2, 2, f=2), conv("b", 3, 3, 1, 1, f=2), outp())
        values, _ = kernel_shape_props(g)
        assert values["prop_nonoverlapping"] == 0.5
        assert values["avg_stride_h"] == 1.5


class TestGridReductions:
    def test_total_from_input(self):
        g = chain(inp("d", 100, 100, 1), conv("c", 2, 2, 2, 2, f=4), outp())
        values, _ = grid_reductions(g, infer_shapes(g))  # conv out 50x50
        assert values["avg_grid_reduction_area_total"] == 75.0
        assert values["avg_grid_reduction_height_total"] == 50.0

    def test_consecutive(self):
        g = chain(inp("d", 28, 28, 1), conv("c1", 5, 5, f=4), conv("c2", 2, 2, 2, 2, f=4), outp())
        values, _ = grid_reductions(g, infer_shapes(g))  # 24x24 then 12x12
        assert values["avg_grid_reduction_area_consecutive"] == 75.0

    def test_no_pairs_flagged(self):
        g = chain(inp("d", 8, 8, 1), ip("fc", 4), outp())
        values, undefined = grid_reductions(g, infer_shapes(g))
        assert values["avg_grid_reduction_area_total"] == 0.0
        assert "avg_grid_reduction_area_consecutive" in undefined

    def test_pair_sets_match_path_oracle(self):
        rng = np.random.default_rng(92)
        for _ in range(150):
            g = random_valid_graph(rng)
            oracle_consecutive, oracle_total = conv_pairs_from_paths(g)
            assert consecutive_conv_pairs(g) == oracle_consecutive
            assert total_reduction_pairs(g) == oracle_total


class TestRatios:
    def test_single_conv(self):
        g = chain(inp("d", 28, 28, 1), conv("c", 3, 5, f=12), outp())
        values, _ = ratio_attributes(g, infer_shapes(g))
        assert values["avg_ratio_features_to_depth"] == 6.0
        assert values["avg_ratio_kerArea_to_depth"] == 7.5
        assert values["avg_ratio_features_to_kerWidth"] == pytest.approx(12 / 5)

    def test_two_convs_at_different_depths(self):
        g = chain(inp("d", 28, 28, 1), conv("a", 1, 1, f=8), relu("r"), conv("b", 1, 1, f=8), outp())
        values, _ = ratio_attributes(g, infer_shapes(g))
        assert values["avg_ratio_features_to_depth"] == (8 / 2 + 8 / 4) / 2


class TestExtract:
    def test_vector_covers_canonical_order(self):
        g = chain(inp("d", 28, 28, 1), conv("c", 5, 5, f=6), outp())
        v = extract_attributes(g, "tiny")
        assert tuple(v.values.keys()) == ATTRIBUTE_NAMES
        assert v.values["num_conv_layers"] == 1.0

    def test_three_input_two_output_topology_is_finite(self):
        rng = np.random.default_rng(5)
        from archattr.popgen import GenConfig, sample_architecture
        g = sample_architecture(GenConfig(), 3)
        assert len(g.inputs()) == 3
        v = extract_attributes(g, "mv")
        assert all(np.isfinite(x) for x in v.values.values())

    def test_invariant_under_renaming(self):
        rng = np.random.default_rng(93)
        for _ in range(25):
            g = random_valid_graph(rng)
            renamed = NetworkGraph(
                tuple(LayerSpec(**{**l.__dict__, "name": f"L{i:03d}"})
                      for i, l in enumerate(g.layers)),
                g.edges, g.population_tag)
            assert extract_attributes(g, "a").values == extract_attributes(renamed, "b").values

    def test_inserting_relu_after_conv_bumps_count_only(self):
        rng = np.random.default_rng(94)
        for _ in range(25):
            n = int(rng.integers(1, 5))
            layers = [inp("d", 32, 32, 1)]
            for i in range(n):
                layers.append(conv(f"c{i}", int(rng.integers(1, 4)), int(rng.integers(1, 4)), f=4))
            layers.append(outp())
            g = chain(*layers)
            base = extract_attributes(g, "base").values
            pos = int(rng.integers(1, n + 1))  # insert right after layer `pos` (a conv)
            with_relu = layers[: pos + 1] + [relu("extra")] + layers[pos + 1:]
            v = extract_attributes(chain(*with_relu), "plus").values
            assert v["num_relu"] == base["num_relu"] + 1
            for name in ("prop_1x1_kernels", "prop_square_kernels",
                         "prop_horiz_kernels", "prop_vert_kernels"):
                assert v[name] == base[name]

    def test_proportions_bounded(self):
        rng = np.random.default_rng(95)
        for _ in range(100):
            v = extract_attributes(random_valid_graph(rng), "x").values
            for name, value in v.items():
                if name.startswith("prop_"):
                    assert 0.0 <= value <= 1.0
                if name.startswith("avg_grid_reduction"):
                    assert value <= 100.0
                if name.startswith("num_"):
                    assert value == int(value) or name == "num_conv_features"


class TestTable:
    def test_csv_round_trip(self):
        g = chain(inp("d", 28, 28, 1), conv("c", 5, 5, f=6), outp())
        table = AttributeTable([extract_attributes(g, "one"), extract_attributes(g, "two")])
        parsed = AttributeTable.from_csv(table.to_csv())
        assert [r.values for r in parsed.rows] == [r.values for r in table.rows]

    def test_header_is_golden(self):
        g = chain(inp("d", 8, 8, 1), ip("fc", 2), outp())
        header = AttributeTable([extract_attributes(g, "x")]).to_csv().splitlines()[0]
        assert header == (
            "network_id,net_depth_avg,num_conv_layers,num_pooling_layers,avg_IP_neurons,"
            "avg_IP_weights,num_conv_features,prop_conv_into_pool,prop_pool_into_pool,"
            "prop_1x1_kernels,prop_square_kernels,prop_horiz_kernels,prop_vert_kernels,"
            "num_relu,num_sigmoid,avg_grid_reduction_area_consecutive,"
            "avg_grid_reduction_height_consecutive,avg_grid_reduction_width_consecutive,"
            "avg_grid_reduction_area_total,avg_grid_reduction_height_total,"
            "avg_grid_reduction_width_total,prop_nonoverlapping,avg_stride_h,avg_stride_w,"
            "avg_ratio_features_to_depth,avg_ratio_features_to_kerArea,"
            "avg_ratio_features_to_kerHeight,avg_ratio_features_to_kerWidth,"
            "avg_ratio_kerArea_to_depth,avg_ratio_kerHeight_to_depth,avg_ratio_kerWidth_to_depth"
        )

    def test_duplicate_ids_rejected(self):
        g = chain(inp("d", 8, 8, 1), ip("fc", 2), outp())
        rows = [extract_attributes(g, "same"), extract_attributes(g, "same")]
        with pytest.raises(Exception):
            AttributeTable(rows)
