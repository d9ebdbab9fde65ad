import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from slameval.core import (
    Association,
    OccupancyGrid2D,
    Point3,
    PointCloud,
    Pose,
    RigidTransform,
    Trajectory,
    VoxelGrid,
    compose,
    matrix_to_quaternion,
    quaternion_multiply,
    quaternion_to_matrix,
    quaternions_to_matrices,
    voxel_downsample,
    voxelize,
    yaw_quaternion,
)
from slameval.errors import InvalidInputError


def random_quats(n, seed=0):
    q = np.random.default_rng(seed).normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


class TestQuaternions:
    def test_matches_scipy(self):
        qs = random_quats(200)
        expected = Rotation.from_quat(qs).as_matrix()  # scipy uses xyzw as well
        np.testing.assert_allclose(quaternions_to_matrices(qs), expected, atol=1e-12)
        for q, R in zip(qs[:20], expected):
            np.testing.assert_allclose(quaternion_to_matrix(q), R, atol=1e-12)

    def test_matrix_round_trip(self):
        for q in random_quats(100, seed=1):
            back = matrix_to_quaternion(quaternion_to_matrix(q))
            assert back[3] >= 0
            # q and -q are the same rotation
            assert min(np.abs(back - q).max(), np.abs(back + q).max()) < 1e-12

    def test_multiply_composes_rotations(self):
        a, b = random_quats(2, seed=2)
        np.testing.assert_allclose(
            quaternion_to_matrix(quaternion_multiply(a, b)),
            quaternion_to_matrix(a) @ quaternion_to_matrix(b),
            atol=1e-12,
        )

    def test_yaw(self):
        R = quaternion_to_matrix(yaw_quaternion(np.pi / 2))
        np.testing.assert_allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    @pytest.mark.parametrize("q", [[0, 0, 0, 0], [np.nan, 0, 0, 1], [0, 0, 0, 2]])
    def test_rejects_bad(self, q):
        with pytest.raises(InvalidInputError):
            quaternion_to_matrix(q)


class TestPoseTrajectory:
    def test_pose_normalizes_and_freezes(self):
        p = Pose(1.0, [1, 2, 3], [0, 0, 0, 1 + 1e-9])
        assert abs(np.linalg.norm(p.orientation) - 1) < 1e-15
        with pytest.raises(ValueError):
            p.position[0] = 5

    @pytest.mark.parametrize("t", [-1.0, float("nan"), float("inf")])
    def test_bad_timestamp(self, t):
        with pytest.raises(InvalidInputError):
            Pose(t, [0, 0, 0])

    def test_ordering(self):
        with pytest.raises(InvalidInputError):
            Trajectory.from_arrays([0, 1, 1], np.zeros((3, 3)))
        with pytest.raises(InvalidInputError):
            Trajectory.from_arrays([2, 1], np.zeros((2, 3)))

    def test_from_arrays(self):
        t = Trajectory.from_arrays([0, 0.1, 0.2], np.arange(9.0).reshape(3, 3))
        assert len(t) == 3
        np.testing.assert_array_equal(t.positions[2], [6, 7, 8])
        np.testing.assert_array_equal(t.rotations[0], np.eye(3))
        assert isinstance(t[1:], Trajectory) and len(t[1:]) == 2


class TestPointCloud:
    def test_from_points_and_index(self):
        c = PointCloud.from_points([Point3(1, 2, 3, (255, 0, 0), 4), Point3(0, 0, 0, (1, 2, 3))])
        assert c.count == 2
        assert c[0] == Point3(1.0, 2.0, 3.0, (255, 0, 0), 4)
        assert c[1].frame_id is None and c.frame_ids[1] == -1

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            PointCloud([[np.nan, 0, 0]])
        with pytest.raises(InvalidInputError):
            PointCloud(np.zeros((2, 3)), colors=[[0, 0, 0]])
        with pytest.raises(InvalidInputError):
            PointCloud(np.zeros((1, 3)), colors=[[0, 0, 300]])
        with pytest.raises(InvalidInputError):
            PointCloud.from_points([Point3(0, 0, 0, (1, 1, 1)), Point3(1, 1, 1)])

    def test_concatenate_and_select(self):
        a = PointCloud(np.zeros((2, 3)), frame_ids=[3, 4])
        b = PointCloud(np.ones((1, 3)))
        c = PointCloud.concatenate([a, b])
        np.testing.assert_array_equal(c.frame_ids, [3, 4, -1])
        assert c.select([2]) == PointCloud(np.ones((1, 3)), frame_ids=[-1])


class TestVoxels:
    def test_half_open_cells(self):
        g = VoxelGrid.from_points([[0.0, 0.0, 0.0], [0.05, 0.0, 0.0], [0.0499999, 0, 0], [-1e-12, 0, 0]], 0.05)
        assert g.cell_set == {(0, 0, 0), (1, 0, 0), (-1, 0, 0)}

    def test_sorted_unique_and_equality(self):
        pts = np.random.default_rng(0).random((300, 3))
        a = VoxelGrid.from_points(pts, 0.1)
        b = VoxelGrid.from_points(pts[::-1], 0.1)
        assert a == b
        assert len(a) == len({tuple(c) for c in np.floor(pts / 0.1).astype(int)})

    def test_first_color_wins(self):
        cloud = PointCloud([[0.01, 0, 0], [0.02, 0, 0]], colors=[[1, 1, 1], [9, 9, 9]])
        g = voxelize(cloud, 0.05)
        np.testing.assert_array_equal(g.colors, [[1, 1, 1]])

    def test_downsample_keeps_first_in_order(self):
        cloud = PointCloud([[0.32, 0, 0], [0.01, 0, 0], [0.33, 0, 0], [0.02, 0, 0]], frame_ids=[0, 1, 2, 3])
        d = voxel_downsample(cloud, 0.05)
        np.testing.assert_array_equal(d.frame_ids, [0, 1])

    def test_dense_view(self):
        g = VoxelGrid(0.1, (0, 0, 0), [[1, 2, 3], [2, 2, 5]])
        lo, occ = g.dense
        assert tuple(lo) == (1, 2, 3) and occ.shape == (2, 1, 3) and occ.sum() == 2

    def test_union_lattice_check(self):
        a = VoxelGrid(0.1, (0, 0, 0), [[0, 0, 0]])
        assert len(a.union(VoxelGrid(0.1, (0, 0, 0), [[0, 0, 0], [1, 0, 0]]))) == 2
        with pytest.raises(InvalidInputError):
            a.union(VoxelGrid(0.2, (0, 0, 0), [[0, 0, 0]]))

    def test_grid2d_extent_check(self):
        g = OccupancyGrid2D(0.05, (0, 0), [[0, 0], [3, 1]])
        assert (g.width, g.height) == (4, 2)
        with pytest.raises(InvalidInputError):
            OccupancyGrid2D(0.05, (0, 0), [[0, 0], [3, 1]], width=2, height=2)


class TestTransforms:
    def test_apply_inverse(self):
        R = Rotation.from_quat(random_quats(1, 5)[0]).as_matrix()
        T = RigidTransform(R, [1, 2, 3], 2.0)
        x = np.random.default_rng(1).random((10, 3))
        np.testing.assert_allclose(T.inverse().apply(T.apply(x)), x, atol=1e-12)
        np.testing.assert_allclose(T.apply(x), 2.0 * x @ R.T + [1, 2, 3], atol=1e-12)

    def test_rejects_reflection(self):
        with pytest.raises(InvalidInputError):
            RigidTransform(np.diag([1.0, 1.0, -1.0]), [0, 0, 0])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 10_000))
    def test_compose_is_sequential_application(self, s1, s2):
        Ra, Rb = (Rotation.from_quat(random_quats(1, s)[0]).as_matrix() for s in (s1, s2))
        a = RigidTransform(Ra, [1, 0, 0], 1.5)
        b = RigidTransform(Rb, [0, -2, 3], 0.5)
        x = np.random.default_rng(s1).normal(size=(5, 3))
        np.testing.assert_allclose(compose(a, b).apply(x), a.apply(b.apply(x)), atol=1e-9)
        np.testing.assert_allclose((a @ b).matrix(), a.matrix() @ b.matrix(), atol=1e-9)


class TestAssociation:
    def test_counts(self):
        a = Association([0, 2], [[0, 0, 0], [1, 1, 1]], [1])
        assert a.matched_count == 2 and a.miss_count == 1

    def test_duplicate_and_overlap(self):
        with pytest.raises(InvalidInputError):
            Association([0, 0], np.zeros((2, 3)))
        with pytest.raises(InvalidInputError):
            Association([0], np.zeros((1, 3)), [0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_grid_union_is_a_set_union(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (VoxelGrid(0.05, (0, 0, 0), rng.integers(-5, 5, (int(rng.integers(0, 30)), 3))) for _ in range(3))
    assert a.union(b) == b.union(a)
    assert a.union(b).union(c) == a.union(b.union(c))
    assert a.union(b).cell_set == a.cell_set | b.cell_set
