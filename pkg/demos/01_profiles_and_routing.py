"""
Skill profiles and routing on a toy model pool
==============================================

Six mock models, each strong in two of eight subjects, answer a small
labeled question set.  Their right and wrong answers become signed skill
profiles, and the profiles decide which models get recruited for new
questions.
"""

import numpy as np

from skillroute.embed import Embedder, HashingProvider
from skillroute.keywords import SkillSet
from skillroute.pipeline import preprocess
from skillroute.router import RoutingParams, global_competency, route, routing_distribution
from skillroute.synthetic import make_world

# a labeled set of 60 four-option questions, two subjects each
world = make_world(60, seed=0, prefix="v")
config = world.config()
pre = preprocess(world.questions, config, world.backends())

# each correct answer adds +1 to every subject of the question, each miss -1
for p in pre.profiles:
    top = sorted(p.skill_scores.items(), key=lambda kv: -kv[1])[:3]
    print(f"{p.model_id}: total {p.total_score:+d}, best {top}")
print("aggregator:", pre.aggregator_id)

# relevance of each model to a new question = competency * summed skill scores
embedder = Embedder(HashingProvider())
gamma = global_competency(pre.profiles)
query = SkillSet("new", frozenset({"biology", "chemistry"}))
dist = routing_distribution(query, pre.profiles, gamma, embedder, temperature=0.5)
for m, prob in dist.probabilities.items():
    print(f"{m}: suitability {dist.suitability[m]:+.0f}, p = {prob:.3f}")

# three distinct experts drawn from that distribution; same seed, same draw
params = RoutingParams(k=3)
for seed in (0, 0, 1):
    _, assignment = route(query, pre.profiles, gamma, params, embedder, np.random.default_rng(seed))
    print("seed", seed, "->", assignment.experts)
