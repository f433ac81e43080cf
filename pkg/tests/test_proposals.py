import numpy as np
import pytest

from pseudobox.evaluation import iou3d
from pseudobox.geometry import PointCloud, points_in_box
from pseudobox.proposals import CONTAINMENT_SLACK, Proposal, ProposalParams, generate_proposals
from pseudobox.proposals import schedule_indices
from pseudobox.seeds import SeedPointSet
from pseudobox.synthetic import SynthConfig, sample_scene


class TestProposalParams:
    def test_defaults_match_reference_setup(self):
        p = ProposalParams()
        assert p.r_init == 1.0
        assert p.delta == 0.1
        assert p.neighborhood_radius == 8.0

    def test_validation(self):
        with pytest.raises(ValueError):
            ProposalParams(r_init=0.0)
        with pytest.raises(ValueError):
            ProposalParams(min_seed_containment=0.0)
        with pytest.raises(ValueError):
            ProposalParams(max_radii=0)


class TestScheduleIndices:
    def test_small_counts_evaluate_every_seed(self):
        np.testing.assert_array_equal(schedule_indices(5, 16), [1, 2, 3, 4, 5])

    def test_large_counts_subsampled_with_endpoints(self):
        ts = schedule_indices(200, 16)
        assert ts[0] == 1 and ts[-1] == 200
        assert len(ts) <= 16
        assert (np.diff(ts) > 0).all()

    def test_single_seed(self):
        np.testing.assert_array_equal(schedule_indices(1, 16), [1])


def single_object_scene(seed=0):
    cfg = SynthConfig(
        seed=seed, objects_per_scene=(1, 1), clutter_points=0, surface_inset=0.08,
        points_per_object=(200, 300), class_mix={"Car": 1.0},
    )
    return sample_scene(cfg, 0)


class TestGenerateProposals:
    def test_isolated_object_recovers_box(self):
        scene = single_object_scene()
        bundle = scene.bundle
        gt = bundle.gt_boxes[0]
        # exact seeds: all of the object's own points
        seeds = [SeedPointSet(0, bundle.gt_classes[0], np.nonzero(scene.point_object == 0)[0])]
        proposals = generate_proposals(bundle.cloud, seeds, ProposalParams())
        assert proposals
        assert max(iou3d(p.box, gt) for p in proposals) >= 0.7

    def test_single_seed_single_radius(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(0, 0.15, size=(40, 3)) + [5.0, 0.0, 0.0]
        cloud = PointCloud(pts)
        seeds = [SeedPointSet(0, "Pedestrian", np.array([0]))]
        proposals = generate_proposals(cloud, seeds, ProposalParams())
        assert len({p.radius for p in proposals}) <= 1
        for p in proposals:
            assert p.radius == pytest.approx(1.1, abs=1e-12)  # r_init + delta at t = N = 1

    def test_empty_seed_list(self):
        cloud = PointCloud(np.random.default_rng(0).uniform(0, 1, size=(10, 3)))
        assert generate_proposals(cloud, [], ProposalParams()) == []

    def test_retained_proposals_contain_seed_fraction_and_cluster(self):
        scene = single_object_scene(seed=5)
        bundle = scene.bundle
        seeds = [SeedPointSet(0, bundle.gt_classes[0], np.nonzero(scene.point_object == 0)[0])]
        params = ProposalParams()
        for p in generate_proposals(bundle.cloud, seeds, params):
            inside_cluster = points_in_box(bundle.cloud.xyz[p.cluster_indices], p.box, CONTAINMENT_SLACK)
            assert inside_cluster.all()
            seed_inside = points_in_box(bundle.cloud.xyz[seeds[0].indices], p.box, CONTAINMENT_SLACK)
            assert seed_inside.sum() >= params.min_seed_containment * len(seeds[0])

    def test_no_exact_duplicates(self):
        scene = single_object_scene(seed=9)
        bundle = scene.bundle
        seeds = [SeedPointSet(0, bundle.gt_classes[0], np.nonzero(scene.point_object == 0)[0])]
        proposals = generate_proposals(bundle.cloud, seeds, ProposalParams())
        keys = [tuple(np.round([*p.box.center, *p.box.size, p.box.yaw], 5)) for p in proposals]
        assert len(keys) == len(set(keys))

    def test_degenerate_clusters_skipped_quietly(self, caplog):
        # three collinear points: the only cluster cannot be boxed
        cloud = PointCloud(np.array([[0.0, 0, 0], [0.1, 0.1, 0], [0.2, 0.2, 0]]))
        seeds = [SeedPointSet(0, "Car", np.array([0, 1, 2]))]
        assert generate_proposals(cloud, seeds, ProposalParams(min_pts=1)) == []


class TestProposalInvariants:
    def test_cluster_must_be_nonempty(self):
        from pseudobox.geometry import OrientedBox3D

        with pytest.raises(ValueError):
            Proposal(OrientedBox3D((0, 0, 0), (1, 1, 1), 0.0), 0, "Car", 0.5, np.array([], dtype=np.int64))
