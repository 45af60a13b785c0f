import pytest
from hypothesis import given
from hypothesis import strategies as st

from copsslite.codec import Data, Interest, Publish, Subscribe, Unsubscribe, make_seq
from copsslite.engine import (
    ContentStore,
    DeliverLocal,
    Drop,
    DropReason,
    NodeState,
    Transmit,
    handle,
    on_data,
    on_interest,
    on_publish,
    on_subscribe,
    on_unsubscribe,
    publish_two_step,
)
from copsslite.naming import CONSUMER_FACE, FibTable, parse_name

import harness

n = parse_name


def node(fib=(), rp=(), cs_capacity=16, **kw):
    table = FibTable()
    for prefix, face in fib:
        table.add(n(prefix), face)
    return NodeState(1, fib=table, cs=ContentStore(cs_capacity), is_rp_for={n(p) for p in rp}, **kw)


def pub(*cds, seq=make_seq(1, 1), payload=b"x", snippet=False):
    return Publish(tuple(n(c) for c in cds), payload, snippet, seq)


# -- Interest / Data -------------------------------------------------------------

def test_cs_hit_answers_on_in_face():
    s = node(fib=[("/a", 9)])
    s.cs.insert(n("/a/b"), b"v")
    assert on_interest(s, 1, Interest(n("/a/b")), 0.0) == [Transmit(1, Data(n("/a/b"), b"v"))]
    assert s.pit == {}


def test_pit_aggregates_second_interest():
    s = node(fib=[("/x", 3)])
    first = on_interest(s, 1, Interest(n("/x"), 1, 16), 0.0)
    assert first == [Transmit(3, Interest(n("/x"), 1, 15))]
    assert on_interest(s, 2, Interest(n("/x"), 2, 16), 1.0) == []
    assert s.pit[n("/x")].faces == {1, 2}


def test_hop_limit_exhausted():
    s = node(fib=[("/x", 3)])
    assert on_interest(s, 1, Interest(n("/x"), 0, 1), 0.0) == [Drop(DropReason.HOP_LIMIT)]


def test_no_route():
    s = node(fib=[("/x", 1)])
    assert on_interest(s, 1, Interest(n("/x")), 0.0) == [Drop(DropReason.NO_ROUTE)]
    assert on_interest(s, 1, Interest(n("/y")), 0.0) == [Drop(DropReason.NO_ROUTE)]


def test_data_satisfies_pit_and_is_cached():
    s = node(fib=[("/x", 3)])
    on_interest(s, 1, Interest(n("/x")), 0.0)
    on_interest(s, 2, Interest(n("/x")), 0.0)
    d = Data(n("/x"), b"p")
    assert on_data(s, 3, d, 1.0) == [Transmit(1, d), Transmit(2, d)]
    assert n("/x") not in s.pit
    assert n("/x") in s.cs


def test_unsolicited_and_duplicate_data():
    s = node()
    d = Data(n("/x"), b"p")
    assert on_data(s, 3, d, 0.0) == [Drop(DropReason.UNSOLICITED)]
    s.cs.insert(n("/x"), b"p")
    assert on_data(s, 3, d, 0.0) == [Drop(DropReason.DUPLICATE)]


def test_lru_eviction_order():
    s = node(fib=[("/a", 3), ("/b", 3), ("/c", 3)], cs_capacity=2)
    for name in ("/a", "/b", "/c"):
        on_interest(s, 1, Interest(n(name)), 0.0)
    on_data(s, 3, Data(n("/a"), b"1"), 0.0)
    on_data(s, 3, Data(n("/b"), b"2"), 0.0)
    on_data(s, 3, Data(n("/c"), b"3"), 0.0)
    assert s.cs.names() == [n("/b"), n("/c")]


def test_cs_hit_refreshes_recency():
    cs = ContentStore(2)
    cs.insert(n("/a"), b"1")
    cs.insert(n("/b"), b"2")
    cs.get(n("/a"))
    assert cs.insert(n("/c"), b"3") == n("/b")


def test_expired_pit_entry_makes_data_unsolicited():
    s = node(fib=[("/x", 3)], pit_lifetime_ms=100.0)
    on_interest(s, 1, Interest(n("/x")), 0.0)
    assert on_data(s, 3, Data(n("/x")), 100.0) == [Drop(DropReason.UNSOLICITED)]


def test_local_consumer_receives_data():
    s = node(fib=[("/x", 3)])
    on_interest(s, CONSUMER_FACE, Interest(n("/x")), 0.0)
    d = Data(n("/x"), b"p")
    assert on_data(s, 3, d, 1.0) == [DeliverLocal(d)]


@pytest.mark.parametrize("count", [2, 3, 4, 5])
def test_pit_aggregation_property(count):
    s = node(fib=[("/x", 9)])
    upstream = []
    for face in range(1, count + 1):
        upstream += [a for a in on_interest(s, face, Interest(n("/x"), face), 0.0)
                     if isinstance(a, Transmit)]
    assert len(upstream) == 1
    assert s.pit[n("/x")].faces == set(range(1, count + 1))


# -- Subscribe / Unsubscribe ---------------------------------------------------------

def test_subscribe_forwards_then_aggregates():
    s = node(fib=[("/s", 9)])
    assert on_subscribe(s, 1, Subscribe(n("/s"))) == [Transmit(9, Subscribe(n("/s")))]
    assert s.st == {n("/s"): {1}}
    assert on_subscribe(s, 2, Subscribe(n("/s"))) == []
    assert s.st == {n("/s"): {1, 2}}


def test_subscribe_stops_at_rp():
    s = node(rp=["/s"])
    assert on_subscribe(s, 1, Subscribe(n("/s"))) == []
    assert s.st == {n("/s"): {1}}


def test_subscribe_without_route():
    s = node()
    assert on_subscribe(s, 1, Subscribe(n("/s"))) == [Drop(DropReason.NO_ROUTE)]


def test_unsubscribe():
    s = node(fib=[("/s", 9)])
    s.st = {n("/s"): {1, 2}}
    assert on_unsubscribe(s, 1, Unsubscribe(n("/s"))) == []
    assert s.st == {n("/s"): {2}}
    assert on_unsubscribe(s, 2, Unsubscribe(n("/s"))) == [Transmit(9, Unsubscribe(n("/s")))]
    assert s.st == {}
    assert on_unsubscribe(s, 2, Unsubscribe(n("/z"))) == [Drop(DropReason.NOT_SUBSCRIBED)]


# -- Publish ------------------------------------------------------------------

def test_publish_fans_out_at_rp():
    s = node(rp=["/s"])
    s.st = {n("/s"): {1, 2}}
    p = pub("/s/temp")
    assert on_publish(s, 3, p) == [Transmit(1, p), Transmit(2, p)]


def test_publish_single_copy_across_cds():
    s = node(rp=["/a", "/b"])
    s.st = {n("/a"): {1}, n("/b"): {1}}
    p = pub("/a/x", "/b/y")
    assert on_publish(s, 2, p) == [Transmit(1, p)]


def test_publish_replay_is_duplicate():
    s = node(rp=["/s"])
    s.st = {n("/s"): {1}}
    p = pub("/s")
    on_publish(s, 2, p)
    assert on_publish(s, 2, p) == [Drop(DropReason.DUPLICATE)]


def test_publish_climbs_toward_rp_and_skips_in_face():
    s = node(fib=[("/s", 9)])
    s.st = {n("/s"): {1, 9}}
    p = pub("/s/t")
    # RP-ward face already downstream: one copy only
    assert on_publish(s, 2, p) == [Transmit(1, p), Transmit(9, p)]
    q = pub("/s/t", seq=make_seq(1, 2))
    assert on_publish(s, 9, q) == [Transmit(1, q)]


def test_publish_local_delivery_once():
    s = node(rp=["/a"])
    s.st = {n("/a"): {CONSUMER_FACE, 4}, n("/a/x"): {CONSUMER_FACE}}
    p = pub("/a/x")
    assert on_publish(s, 2, p) == [DeliverLocal(p), Transmit(4, p)]


def test_publish_nowhere_to_go():
    s = node(rp=["/s"])
    assert on_publish(s, 2, pub("/s")) == [Drop(DropReason.NO_ROUTE)]


def test_dedup_window_is_bounded():
    s = node(rp=["/s"], seen_window=2)
    s.st = {n("/s"): {1}}
    for i in range(1, 4):
        on_publish(s, 2, pub("/s", seq=make_seq(1, i)))
    assert len(s.seen_pubs) == 2
    # the oldest key fell out of the window
    assert on_publish(s, 2, pub("/s", seq=make_seq(1, 1))) == [Transmit(1, pub("/s"))]


def test_asleep_node_drops_everything():
    s = node(rp=["/s"], awake=False)
    for pkt in (Interest(n("/s")), Data(n("/s")), Subscribe(n("/s")), Unsubscribe(n("/s")), pub("/s")):
        assert handle(s, 1, pkt, 0.0) == [Drop(DropReason.ASLEEP)]


# -- two-step publication --------------------------------------------------------------

def test_two_step_schedule():
    snip = pub("/s", seq=make_seq(1, 1), snippet=True, payload=b"")
    full = pub("/s", seq=make_seq(1, 2), payload=b"full")
    assert publish_two_step(snip, full, 500.0, at=10.0) == [(10.0, snip), (510.0, full)]


@pytest.mark.parametrize("snip_flag,full_flag,cds,seqs,delay", [
    (False, False, ("/s", "/s"), (1, 2), 1.0),
    (True, True, ("/s", "/s"), (1, 2), 1.0),
    (True, False, ("/s", "/t"), (1, 2), 1.0),
    (True, False, ("/s", "/s"), (2, 2), 1.0),
    (True, False, ("/s", "/s"), (1, 2), -1.0),
])
def test_two_step_preconditions(snip_flag, full_flag, cds, seqs, delay):
    snip = pub(cds[0], seq=seqs[0], snippet=snip_flag)
    full = pub(cds[1], seq=seqs[1], snippet=full_flag)
    with pytest.raises(ValueError):
        publish_two_step(snip, full, delay)


def test_two_step_late_joiner_gets_only_full():
    s = node(rp=["/s"])
    snip = pub("/s/t", seq=make_seq(1, 1), snippet=True, payload=b"")
    full = pub("/s/t", seq=make_seq(1, 2), payload=b"full")
    delivered = []
    for t, p in publish_two_step(snip, full, 100.0):
        if t > 0:
            on_subscribe(s, CONSUMER_FACE, Subscribe(n("/s")))
        delivered += [a.packet for a in on_publish(s, -1, p) if isinstance(a, DeliverLocal)]
    assert delivered == [full]


def test_two_step_without_subscribers_dies_at_rp():
    s = node(rp=["/s"])
    snip = pub("/s/t", seq=make_seq(1, 1), snippet=True, payload=b"")
    full = pub("/s/t", seq=make_seq(1, 2))
    assert [on_publish(s, -1, p) for _, p in publish_two_step(snip, full, 1.0)] == \
        [[Drop(DropReason.NO_ROUTE)]] * 2


# -- properties ---------------------------------------------------------------------

@given(st.integers(0, 2**32 - 1))
def test_engine_matches_reference_interpreter(seed):
    same, got, want = harness.equivalent(seed)
    assert same


@given(st.integers(0, 2**32 - 1))
def test_single_copy_and_no_echo(seed):
    trace, _ = harness.run_engine(*_world_and_script(seed))
    for entry in trace:
        if len(entry) != 5:
            continue
        _, _, in_face, pkt, acts = entry
        faces = [a[1] for a in acts if a[0] == "tx"]
        assert len(faces) == len(set(faces))
        assert sum(1 for a in acts if a[0] == "deliver") <= 1
        if isinstance(pkt, Data):
            continue  # satisfying a PIT entry may legitimately answer on the arrival face
        for a in acts:
            if a[0] == "tx" and a[2] == pkt:
                assert a[1] != in_face


def _world_and_script(seed):
    import random

    rng = random.Random(seed)
    world = harness.random_world(rng)
    return world, harness.random_script(rng, world)


@given(st.integers(0, 2**32 - 1))
def test_st_entries_never_empty(seed):
    _, states = harness.run_engine(*_world_and_script(seed))
    for s in states.values():
        assert all(s.st.values())
        assert len(s.cs) <= s.cs.capacity


def test_stale_cache_entry_does_not_answer():
    s = node(fib=[("/x", 3)])
    s.cs = ContentStore(4, freshness_ms=50.0)
    on_interest(s, 1, Interest(n("/x")), 0.0)
    on_data(s, 3, Data(n("/x"), b"old"), 10.0)
    assert on_interest(s, 2, Interest(n("/x")), 59.0) == [Transmit(2, Data(n("/x"), b"old"))]
    assert on_interest(s, 2, Interest(n("/x"), 7), 60.0) == [Transmit(3, Interest(n("/x"), 7, 15))]
    # a fresh copy replaces the stale one
    assert on_data(s, 3, Data(n("/x"), b"new"), 61.0) == [Transmit(2, Data(n("/x"), b"new"))]
    assert s.cs.get(n("/x"), 61.0) == b"new"
