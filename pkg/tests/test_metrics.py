import math

import pytest

from graypixel.services.metrics import angular_error, summarize, summarize_by_group


@pytest.mark.parametrize(
    "est, gt, expected",
    [
        ((1.0, 1.0, 1.0), (2.0, 2.0, 2.0), 0.0),
        ((1.0, 0.0, 0.0), (1.0, 1.0, 1.0), 54.7356),
        ((0.8, 1.0, 0.6), (1.0, 1.0, 1.0), 11.537),
    ],
)
def test_angular_error_examples(est, gt, expected):
    assert angular_error(est, gt) == pytest.approx(expected, abs=1e-3)


def test_angular_error_matches_closed_forms():
    assert angular_error((1.0, 0.0, 0.0), (1.0, 1.0, 1.0)) == pytest.approx(math.degrees(math.acos(1 / math.sqrt(3))), abs=1e-6)
    expected = math.degrees(math.acos(2.4 / (math.sqrt(2.0) * math.sqrt(3.0))))
    assert angular_error((0.8, 1.0, 0.6), (1.0, 1.0, 1.0)) == pytest.approx(expected, abs=1e-6)


def test_angular_error_is_symmetric_and_scale_free(rng):
    for a, b, s in zip(rng.uniform(0.01, 1, (500, 3)), rng.uniform(0.01, 1, (500, 3)), rng.uniform(0.1, 10, 500)):
        assert angular_error(a, b) == pytest.approx(angular_error(b, a), abs=1e-9)
        assert angular_error(s * a, b) == pytest.approx(angular_error(a, b), abs=1e-5)
        assert 0.0 <= angular_error(a, b) <= 180.0


def test_angular_error_triangle_inequality(rng):
    for a, b, c in rng.uniform(0.01, 1, (500, 3, 3)):
        assert angular_error(a, c) <= angular_error(a, b) + angular_error(b, c) + 1e-5


def test_identical_vectors_have_zero_error():
    assert angular_error((0.3, 0.5, 0.2), (0.3, 0.5, 0.2)) == pytest.approx(0.0, abs=1e-5)


def test_zero_vector_is_rejected():
    with pytest.raises(ValueError):
        angular_error((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def test_summary_of_zeros():
    stats = summarize([0.0, 0.0, 0.0, 0.0])
    assert (stats.mean, stats.median, stats.trimean, stats.best25, stats.worst25) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert stats.count == 4


def test_summary_of_two_levels():
    stats = summarize([1.0, 1.0, 3.0, 3.0])
    assert stats.mean == 2.0
    assert stats.median == 2.0
    assert stats.trimean == 2.0
    assert stats.best25 == 1.0
    assert stats.worst25 == 3.0


def test_summary_of_five_values():
    stats = summarize([5.0, 1.0, 4.0, 2.0, 3.0])
    assert stats.mean == 3.0
    assert stats.median == 3.0
    assert stats.trimean == 3.0
    assert stats.best25 == 1.0
    assert stats.worst25 == 5.0


def test_single_value_summary():
    stats = summarize([2.5])
    assert (stats.mean, stats.median, stats.best25, stats.worst25, stats.count) == (2.5, 2.5, 2.5, 2.5, 1)


def test_summary_of_constant_list_is_constant():
    stats = summarize([0.1] * 7)
    assert stats.best25 <= stats.mean <= stats.worst25
    assert stats.median == pytest.approx(0.1)


def test_summary_ignores_order(rng):
    errors = rng.uniform(0, 20, size=101)
    assert summarize(errors) == summarize(rng.permutation(errors))


def test_summary_orders_statistics(rng):
    for n in range(1, 60):
        stats = summarize(rng.exponential(3.0, size=n))
        assert stats.best25 <= stats.median <= stats.worst25
        assert stats.best25 <= stats.mean <= stats.worst25


def test_empty_summary_is_rejected():
    with pytest.raises(ValueError):
        summarize([])


def test_group_summaries_are_sorted_by_label():
    groups = summarize_by_group([1.0, 2.0, 3.0, 5.0], ["canon", "nikon", "canon", "nikon"])
    assert list(groups) == ["canon", "nikon"]
    assert groups["canon"].mean == 2.0
    assert groups["nikon"].count == 2
    assert groups["nikon"].worst25 == 5.0


def test_group_lengths_must_match():
    with pytest.raises(ValueError):
        summarize_by_group([1.0, 2.0], ["a"])


def test_group_summary_matches_plain_summary(rng):
    errors = rng.uniform(0, 5, size=40)
    assert summarize_by_group(errors, ["all"] * 40)["all"] == summarize(errors)
