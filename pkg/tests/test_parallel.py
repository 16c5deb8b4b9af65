import threading

from bidcraft.parallel import pmap, thread_cap


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("BIDCRAFT_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("BIDCRAFT_THREADS", "0")
    assert thread_cap() == 1


def test_pmap_preserves_order_and_respects_cap(monkeypatch):
    monkeypatch.setenv("BIDCRAFT_THREADS", "1")
    seen = set()

    def f(x):
        seen.add(threading.get_ident())
        return x * x

    assert pmap(f, range(20)) == [x * x for x in range(20)]
    assert len(seen) == 1
    assert pmap(f, range(20), n_jobs=4) == [x * x for x in range(20)]
