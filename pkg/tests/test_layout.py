import xml.etree.ElementTree as ET

import numpy as np
import pytest

from softmesh.centrality import betweenness
from softmesh.graph import content_flow_graph
from softmesh.layout import LayoutParams, force_layout, positions_bounds, render_svg

from conftest import node, snapshot


def two_cliques(size=10):
    cats = ["anti", "pro"]
    nodes = [node(f"{c}{i}", cats[g]) for g, c in enumerate("ab") for i in range(size)]
    links = []
    for c in "ab":
        members = [f"{c}{i}" for i in range(size)]
        links += [(u, v) for u in members for v in members if u < v]
    links.append(("a0", "b0"))
    return snapshot("cliques", nodes, links)


def mean_pairwise(points):
    pts = np.asarray(points)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return d[np.triu_indices(len(pts), k=1)].mean()


class TestForceLayout:
    def test_same_seed_is_bit_identical(self):
        s = two_cliques(6)
        p = LayoutParams(iterations=30, seed=42)
        assert force_layout(s, p) == force_layout(s, p)

    def test_different_seed_differs(self):
        s = two_cliques(6)
        a = force_layout(s, LayoutParams(iterations=30, seed=1))
        b = force_layout(s, LayoutParams(iterations=30, seed=2))
        assert a != b

    def test_cliques_separate(self):
        s = two_cliques()
        pos = force_layout(s, LayoutParams(iterations=150, seed=7))
        a_pts = [pos[f"a{i}"] for i in range(10)]
        b_pts = [pos[f"b{i}"] for i in range(10)]
        intra = (mean_pairwise(a_pts) + mean_pairwise(b_pts)) / 2
        inter = np.mean(
            [np.linalg.norm(np.subtract(u, v)) for u in a_pts for v in b_pts]
        )
        assert intra < inter

    def test_category_permutation_leaves_positions_unchanged(self):
        s = two_cliques(5)
        swapped = snapshot(
            "swapped",
            [node(n.id, "pro" if n.category.value == "anti" else "anti") for n in s.nodes],
            [(ln.source, ln.target) for ln in s.links],
        )
        p = LayoutParams(iterations=25, seed=3)
        assert force_layout(s, p) == force_layout(swapped, p)

    def test_thread_count_is_bit_identical(self):
        s = two_cliques(8)
        p = LayoutParams(iterations=20, seed=5)
        base = force_layout(s, p, threads=1)
        for threads in (2, 4):
            assert force_layout(s, p, threads=threads) == base

    def test_relabeling_with_explicit_start_matches(self):
        s = two_cliques(4)
        rename = {v: f"z{k:02d}" for k, v in enumerate(sorted(s.ids, reverse=True))}
        relabeled = snapshot(
            "relabeled",
            [node(rename[n.id], n.category.value) for n in s.nodes],
            [(rename[ln.source], rename[ln.target]) for ln in s.links],
        )
        start = {v: (float(i), float(i % 3)) for i, v in enumerate(sorted(s.ids))}
        start_relabeled = {rename[v]: xy for v, xy in start.items()}
        p = LayoutParams(iterations=10, seed=0)
        a = force_layout(s, p, initial_positions=start)
        b = force_layout(relabeled, p, initial_positions=start_relabeled)
        for v in s.ids:
            assert a[v] == pytest.approx(b[rename[v]], abs=1e-8)

    def test_positions_finite_and_cover_active_only(self):
        s = snapshot(
            "mixed",
            [node("a"), node("b", "pro"), node("gone", "pro", status="removed")],
            [("a", "b")],
        )
        pos = force_layout(s, LayoutParams(iterations=50, seed=1))
        assert set(pos) == {"a", "b"}
        assert all(np.isfinite(xy).all() for xy in pos.values())

    def test_coincident_start_separates(self):
        s = snapshot("pair", [node("a"), node("b", "pro")], [("a", "b")])
        start = {"a": (0.0, 0.0), "b": (0.0, 0.0)}
        pos = force_layout(s, LayoutParams(iterations=5, seed=9), initial_positions=start)
        assert pos["a"] != pos["b"]
        assert all(np.isfinite(xy).all() for xy in pos.values())

    def test_missing_initial_position_rejected(self):
        s = snapshot("pair", [node("a"), node("b", "pro")], [("a", "b")])
        with pytest.raises(ValueError):
            force_layout(s, initial_positions={"a": (0.0, 0.0)})

    def test_empty_snapshot(self):
        assert force_layout(snapshot("empty", [])) == {}

    def test_param_validation(self):
        with pytest.raises(ValueError):
            LayoutParams(iterations=0)
        with pytest.raises(ValueError):
            LayoutParams(repulsion_scale=0.0)
        with pytest.raises(ValueError):
            LayoutParams(gravity=-1.0)


def star(n_leaves=5):
    leaves = [node(f"l{i}", "pro") for i in range(n_leaves)]
    links = [("hub", f"l{i}") for i in range(n_leaves)] + [
        (f"l{i}", "hub") for i in range(n_leaves)
    ]
    return snapshot("star", [node("hub")] + leaves, links)


def circles(svg):
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    return {c.find(f"{ns}title").text: c for c in root.iter(f"{ns}circle")}


class TestRenderSvg:
    def render(self, s, iterations=20):
        pos = force_layout(s, LayoutParams(iterations=iterations, seed=4))
        cent = betweenness(content_flow_graph(s))
        return render_svg(s, pos, cent), pos, cent

    def test_equal_betweenness_equal_radii(self):
        svg, _, _ = self.render(star())
        by_id = circles(svg)
        radii = {by_id[f"l{i}"].get("r") for i in range(5)}
        assert len(radii) == 1

    def test_max_betweenness_gets_max_radius(self):
        svg, _, _ = self.render(star())
        assert circles(svg)["hub"].get("r") == "40.00"

    def test_zero_scores_render_at_min_radius(self):
        s = snapshot("flat", [node("a"), node("b", "pro")])
        svg, _, _ = self.render(s)
        assert {c.get("r") for c in circles(svg).values()} == {"3.00"}

    def test_category_colors(self):
        s = snapshot(
            "colors",
            [node("a"), node("p", "pro"), node("n", "neutral", subtype="parenting")],
        )
        svg, _, _ = self.render(s)
        by_id = circles(svg)
        assert by_id["a"].get("fill") == "#d62728"
        assert by_id["p"].get("fill") == "#1f77b4"
        assert by_id["n"].get("fill") not in {"#d62728", "#1f77b4"}

    def test_empty_snapshot_is_valid_svg_without_shapes(self):
        s = snapshot("empty", [])
        svg = render_svg(s, {}, betweenness(content_flow_graph(s)))
        root = ET.fromstring(svg)
        assert not list(root.iter("{http://www.w3.org/2000/svg}circle"))

    def test_missing_position_raises(self):
        s = snapshot("pair", [node("a"), node("b", "pro")])
        cent = betweenness(content_flow_graph(s))
        with pytest.raises(ValueError):
            render_svg(s, {"a": (0.0, 0.0)}, cent)

    def test_deterministic_bytes(self):
        s = star()
        svg1, pos, cent = self.render(s)
        assert svg1 == render_svg(s, pos, cent)

    def test_shared_bounds_change_placement_not_membership(self):
        s = star()
        svg_own, pos, cent = self.render(s)
        wide = positions_bounds(pos)
        wide = (wide[0] - 100, wide[1] - 100, wide[2] + 100, wide[3] + 100)
        svg_shared = render_svg(s, pos, cent, bounds=wide)
        assert svg_shared != svg_own
        assert set(circles(svg_shared)) == set(circles(svg_own))
