from combinatorium import biokit, snapshot
from combinatorium.engine import SimConfig, Simulation


def test_roundtrip_is_exact():
    w = biokit.setup_experiment(biokit.ExperimentSpec(width=48, height=48, ribosomes=4), seed=1)
    text = snapshot.dumps(w)
    back = snapshot.loads(text)
    back.check_invariants()
    assert snapshot.dumps(back) == text
    assert back.total_mass() == w.total_mass()
    for aid, a in w.actors.items():
        b = back.actors[aid]
        assert (a.kind, a.hand, a.next, set(a.prevs), a.parent) == (b.kind, b.hand, b.next, set(b.prevs), b.parent)
        assert list(a.contents or ()) == list(b.contents or ())
        assert w.pos(aid) == back.pos(aid)


def test_roundtrip_after_simulation(tmp_path):
    w = biokit.setup_experiment(biokit.ExperimentSpec(width=32, height=32, ribosomes=3,
                                                      plasmids_per_ribosome_enzyme=1,
                                                      plasmids_per_factory_enzyme=1), seed=2)
    spec = biokit.ExperimentSpec(width=32, height=32)
    sim = Simulation(w, SimConfig(seed=2, replenish=biokit.replenish_targets(spec)))
    sim.run(until=50)
    path = tmp_path / "snap.txt"
    snapshot.save(w, path)
    back = snapshot.load(path)
    back.check_invariants()
    assert snapshot.dumps(back) == path.read_text()
    assert biokit.census(back) == biokit.census(w)


def test_loaded_world_keeps_simulating():
    w = biokit.setup_experiment(biokit.ExperimentSpec(width=32, height=32, ribosomes=2,
                                                      plasmids_per_ribosome_enzyme=1,
                                                      plasmids_per_factory_enzyme=1), seed=5)
    back = snapshot.loads(snapshot.dumps(w))
    sim = Simulation(back, SimConfig(seed=1))
    sim.run(max_events=5_000)
    back.check_invariants()
    # new actors get fresh ids
    assert back.combinator(["amb"], at=(0, 0)) >= max(w.actors) + 1
