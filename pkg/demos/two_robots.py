"""Five rooms, two robots with half-size batteries.

Prints each robot's timeline and which rooms it cleans, then compares with
the one-robot version of the same layout.
"""

from cleansynth import Classification, best_lattice_verdict, grid_synthesize, induce, load_builtin, worst_omega_state
from cleansynth.pomdp import FIN


def timeline(sc, trace):
    names = [p.name for p in sc.places]
    for i in range(sc.k):
        cells = [names[s.x[i]] for s in trace.states]
        print(f"robot {i}: " + " ".join(f"{c:>3}" for c in cells))


def rooms_cleaned(sc, trace):
    out = []
    for i in range(sc.k):
        hit = {
            sc.places[s.x[i]].name
            for s, a in zip(trace.states[1:], trace.actions)
            if a is not FIN and sc.room_of_place[s.x[i]] >= 0
        }
        out.append(sorted(hit))
    return out


for name in ("five_rooms_two_robots", "five_rooms_one_robot"):
    sc = load_builtin(name)
    best = None
    for g in (1, 2, 3):
        sigma = grid_synthesize(sc, g).strategy
        rep = best_lattice_verdict(sc, sigma)
        if best is None or rep.classification.rank > best[1].classification.rank:
            best = (sigma, rep, g)
    sigma, rep, g = best
    print(f"== {name}: {rep.classification} (g={g}) ==")
    tr = induce(sc, sigma, worst_omega_state(sc, rep.omega))
    timeline(sc, tr)
    for i, rooms in enumerate(rooms_cleaned(sc, tr)):
        print(f"robot {i} cleans {', '.join(rooms)}")
    if rep.classification is not Classification.RECURRENT:
        print(rep.format())
    print()
