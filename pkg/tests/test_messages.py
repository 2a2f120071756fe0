import threading

from ccsat.messages import Action, Channel, DecisionMsg, SolvedMsg, discard_stale


def test_fifo_order():
    ch = Channel(record=True)
    for i in range(5):
        ch.send(SolvedMsg(i))
    assert len(ch) == 5 and ch.head() == SolvedMsg(0)
    out = [ch.pop() for _ in range(5)]
    assert out == [SolvedMsg(i) for i in range(5)]
    assert ch.received == ch.sent and ch.empty()


def test_spsc_threads_preserve_order():
    ch = Channel()
    got = []

    def consume():
        while len(got) < 5000:
            if ch:
                got.append(ch.pop().cube_id)

    t = threading.Thread(target=consume)
    t.start()
    for i in range(5000):
        ch.send(SolvedMsg(i))
    t.join()
    assert got == list(range(5000))


def test_discard_stale_lookahead_side():
    assert discard_stale(SolvedMsg(3), [1, 2, 8]) is Action.DISCARD
    assert discard_stale(SolvedMsg(3), [1, 2, 3, 5, 7]) is Action.PROCESS


def test_discard_stale_cdcl_side():
    assert discard_stale(DecisionMsg(9, 3, 4), [2, 3]) is Action.DISCARD
    assert discard_stale(DecisionMsg(9, 3, 4), [2, 3, 5]) is Action.PROCESS
    assert discard_stale(DecisionMsg(9, 0, 4), []) is Action.PROCESS
