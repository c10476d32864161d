import numpy as np
import pytest
from scipy import stats

from sncl.diffcore.graph import ModelGraph
from sncl.diffcore.init import seeded_init
from sncl.diffcore.layers import Activation, Dense
from sncl.diffcore.tensor import Tensor
from sncl.errors import DataError, ParameterError, SequencingError, ShapeError
from sncl.softnet.losses import cosine_logits, metric_loss
from sncl.softnet.prototypes import PrototypeStore, ncm_infer, update_prototypes
from sncl.softnet.soft_mask import SoftMask, build_soft_mask, draw_minor_values
from sncl.softnet.training import SoftNetLearner
from sncl.subnet.masks import BinaryMask, topc_count
from sncl.subnet.scored import ScoredParameter

from _fd import fd_grad


def make_param(shape=(6, 5), seed=0):
    p = ScoredParameter("w", shape, fan_in=shape[-1])
    p.rho[...] = np.random.default_rng(seed).normal(size=shape)
    return p


class TestSoftMaskStructure:
    def test_major_is_exactly_one(self):
        p = make_param()
        sm = build_soft_mask(p, 0.4, noise_seed=11)
        vals = sm.values()
        on = sm.major.bits == 1
        assert sm.major.popcount == topc_count(0.4, p.rho.size)
        assert (vals[on] == 1.0).all()

    def test_minor_strictly_inside_unit_interval(self):
        p = make_param()
        sm = build_soft_mask(p, 0.4, noise_seed=11)
        off_vals = sm.values()[sm.major.bits == 0]
        assert (off_vals > 0.0).all()
        assert (off_vals < 1.0).all()

    def test_minor_only_zeroes_major(self):
        p = make_param()
        sm = build_soft_mask(p, 0.5, noise_seed=3)
        gate = sm.minor_only()
        assert (gate[sm.major.bits == 1] == 0.0).all()
        off = sm.major.bits == 0
        assert np.array_equal(gate[off], sm.values()[off])

    def test_rebuild_is_bit_exact(self):
        p = make_param(seed=5)
        a = build_soft_mask(p, 0.3, noise_seed=42)
        b = build_soft_mask(p, 0.3, noise_seed=42)
        assert a.values().tobytes() == b.values().tobytes()
        assert np.array_equal(a.major.bits, b.major.bits)

    def test_with_major_keeps_noise(self):
        p = make_param()
        sm = build_soft_mask(p, 0.3, noise_seed=9)
        flipped = sm.with_major(BinaryMask(1 - sm.major.bits))
        assert flipped.minor_values is sm.minor_values
        assert not np.array_equal(flipped.major.bits, sm.major.bits)

    @pytest.mark.parametrize("c", [0.0, 1.0, 1.5, -0.2])
    def test_full_or_empty_capacity_rejected(self, c):
        with pytest.raises(ParameterError):
            build_soft_mask(make_param(), c, noise_seed=0)


class TestMinorUniformity:
    def test_ks_uniform(self):
        u = draw_minor_values((100_000,), noise_seed=1234)
        result = stats.kstest(u, "uniform")
        assert result.pvalue > 0.01

    def test_seeds_decorrelate(self):
        a = draw_minor_values((64,), noise_seed=1)
        b = draw_minor_values((64,), noise_seed=2)
        assert not np.array_equal(a, b)

    def test_zero_draws_nudged_into_open_interval(self):
        # direct check of the guard: 0.0 never appears even over many draws
        u = draw_minor_values((300_000,), noise_seed=77)
        assert u.min() > 0.0


class TestCosineLogits:
    def test_aligned_embedding_scores_zero(self):
        protos = np.array([[2.0, 0.0], [0.0, 1.0]])
        emb = Tensor(np.array([[4.0, 0.0]]))
        logits = cosine_logits(emb, protos).data
        assert logits[0, 0] == pytest.approx(0.0, abs=1e-9)
        assert logits[0, 1] == pytest.approx(-1.0, abs=1e-9)

    def test_range(self):
        rng = np.random.default_rng(0)
        emb = Tensor(rng.normal(size=(12, 4)))
        protos = rng.normal(size=(5, 4))
        vals = cosine_logits(emb, protos).data
        assert (vals <= 1e-12).all()
        assert (vals >= -2.0 - 1e-12).all()

    def test_metric_loss_missing_prototype(self):
        emb = Tensor(np.ones((2, 3)))
        with pytest.raises(DataError):
            metric_loss(emb, np.array([0, 7]), np.ones((1, 3)), [0])

    @pytest.mark.parametrize("seed", range(3))
    def test_metric_loss_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        e = rng.normal(size=(5, 4))
        protos = rng.normal(size=(3, 4))
        labels = np.array([10, 11, 12, 10, 11])

        leaf = Tensor(e, needs_grad=True)
        loss = metric_loss(leaf, labels, protos, [10, 11, 12])
        loss.backward()
        numeric = fd_grad(lambda: metric_loss(Tensor(e), labels, protos, [10, 11, 12]).item(), e)
        np.testing.assert_allclose(leaf.grad, numeric, rtol=1e-5, atol=1e-8)


class TestPrototypes:
    def test_update_sets_class_means(self):
        store = PrototypeStore(3)
        rng = np.random.default_rng(1)
        emb = rng.normal(size=(20, 3))
        labels = rng.integers(0, 4, size=20)
        update_prototypes(store, emb, labels)
        for cid in np.unique(labels):
            np.testing.assert_array_equal(store.get(int(cid)), emb[labels == cid].mean(axis=0))

    def test_matrix_orders_by_class_id(self):
        store = PrototypeStore(2)
        store.set(9, [0.0, 1.0])
        store.set(2, [1.0, 0.0])
        protos, ids = store.matrix()
        assert ids == [2, 9]
        np.testing.assert_array_equal(protos[0], [1.0, 0.0])

    def test_empty_store_errors(self):
        with pytest.raises(DataError):
            PrototypeStore(2).matrix()

    def test_dim_validated(self):
        with pytest.raises(ShapeError):
            PrototypeStore(3).set(0, np.ones(4))

    def test_ncm_assigns_nearest(self):
        store = PrototypeStore(2)
        store.set(0, [0.0, 0.0])
        store.set(5, [10.0, 0.0])
        pred = ncm_infer(store, np.array([[1.0, 0.5], [9.0, -0.5]]))
        np.testing.assert_array_equal(pred, [0, 5])

    def test_ncm_tie_goes_to_lowest_id(self):
        store = PrototypeStore(1)
        store.set(3, [1.0])
        store.set(7, [-1.0])
        pred = ncm_infer(store, np.array([[0.0]]))
        assert pred[0] == 3


def build_learner(capacity=0.5, seed=0, base_classes=4, dim=3, hidden=10):
    layers = [Dense("f0", dim, hidden), Activation("a0", "relu"),
              Dense("f1", hidden, hidden), Activation("a1", "relu")]
    model = ModelGraph(layers, {1: Dense("head1", hidden, base_classes)})
    seeded_init(model, seed)
    return SoftNetLearner(model, capacity, embed_dim=hidden, lr=1e-2, seed=seed)


class FakeSession:
    def __init__(self, session_id, classes, x, y):
        self.session_id = session_id
        self.classes = classes
        self.train_x, self.train_y = x, y
        self.eval_x, self.eval_y = x, y

    @property
    def local_train_y(self):
        return np.searchsorted(np.asarray(self.classes), self.train_y)

    @property
    def local_eval_y(self):
        return np.searchsorted(np.asarray(self.classes), self.eval_y)


def cluster_session(session_id, classes, per_class, seed, spread=0.25):
    rng = np.random.default_rng(seed)
    centers = np.eye(3)[np.array(classes) % 3] * 3.0 + np.array(classes)[:, None]
    xs, ys = [], []
    for row, cid in enumerate(classes):
        xs.append(centers[row] + spread * rng.normal(size=(per_class, 3)))
        ys.append(np.full(per_class, cid))
    return FakeSession(session_id, classes, np.concatenate(xs), np.concatenate(ys))


class TestSoftNetLearnerFlow:
    def test_incremental_before_base_errors(self):
        learner = build_learner()
        ds = cluster_session(2, [4, 5], 5, seed=0)
        with pytest.raises(SequencingError):
            learner.incremental_train(ds)

    def test_base_cannot_repeat(self):
        learner = build_learner()
        base = cluster_session(1, [0, 1, 2, 3], 10, seed=1)
        learner.base_train(base, epochs=2, batch_size=8)
        with pytest.raises(SequencingError):
            learner.base_train(base, epochs=1, batch_size=8)

    def test_major_weights_never_move_after_base(self):
        learner = build_learner(seed=3)
        base = cluster_session(1, [0, 1, 2, 3], 12, seed=1)
        learner.base_train(base, epochs=3, batch_size=8)
        frozen = {name: (sm.major.bits.copy(),
                         learner.model.param(name).theta.copy())
                  for name, sm in learner.soft.items()}
        for sid, classes in ((2, [4, 5]), (3, [6, 7])):
            learner.incremental_train(cluster_session(sid, classes, 5, seed=sid))
            for name, (major, theta0) in frozen.items():
                theta = learner.model.param(name).theta
                on = major == 1
                assert np.array_equal(theta[on], theta0[on]), name

    def test_minor_weights_do_move(self):
        learner = build_learner(seed=3)
        base = cluster_session(1, [0, 1, 2, 3], 12, seed=1)
        learner.base_train(base, epochs=3, batch_size=8)
        before = {n: learner.model.param(n).theta.copy() for n in learner.soft}
        learner.incremental_train(cluster_session(2, [4, 5], 5, seed=2))
        moved = sum((learner.model.param(n).theta != before[n]).sum() for n in learner.soft)
        assert moved > 0

    def test_session_order_enforced(self):
        learner = build_learner()
        learner.base_train(cluster_session(1, [0, 1, 2, 3], 8, seed=1), epochs=1, batch_size=8)
        with pytest.raises(SequencingError):
            learner.incremental_train(cluster_session(3, [6, 7], 5, seed=3))

    def test_repeated_class_rejected(self):
        learner = build_learner()
        learner.base_train(cluster_session(1, [0, 1, 2, 3], 8, seed=1), epochs=1, batch_size=8)
        with pytest.raises(SequencingError):
            learner.incremental_train(cluster_session(2, [3, 4], 5, seed=2))

    def test_exemplars_stored_per_new_class(self):
        learner = build_learner(seed=4)
        learner.base_train(cluster_session(1, [0, 1, 2, 3], 10, seed=1), epochs=2, batch_size=8)
        learner.incremental_train(cluster_session(2, [4, 5], 5, seed=2))
        assert sorted(learner.exemplars) == [4, 5]
        assert all(v.shape == (1, 3) for v in learner.exemplars.values())

    def test_prototypes_cover_all_seen_classes(self):
        learner = build_learner(seed=4)
        learner.base_train(cluster_session(1, [0, 1, 2, 3], 10, seed=1), epochs=2, batch_size=8)
        learner.incremental_train(cluster_session(2, [4, 5], 5, seed=2))
        assert learner.store.class_ids == [0, 1, 2, 3, 4, 5]

    def test_ncm_eval_separable_clusters(self):
        learner = build_learner(seed=7)
        base = cluster_session(1, [0, 1, 2, 3], 20, seed=1, spread=0.1)
        learner.base_train(base, epochs=8, batch_size=16)
        acc = learner.ncm_eval(base.eval_x, base.eval_y)
        assert acc >= 0.9
