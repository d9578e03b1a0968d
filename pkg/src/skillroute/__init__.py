"""Skill-based routing of queries to a pool of LLM experts.

Profiles built on a small validation set say which skills each model is
good at; each test query is routed to ``k`` experts sampled from a
relevance distribution, experts run in per-model batches, and a
task-selected aggregator merges their chains of thought.
"""

__version__ = "0.1.0"

from .backend import BackendConfig, MockBackend, MockScript, RemoteBackend, extract_answer, render_prompt
from .config import PipelineConfig, load_config
from .embed import Embedder, HashingProvider, cosine, match_keywords
from .keywords import SkillSet, annotate_question, consolidate, parse_keyword_line
from .pipeline import Backends, aggregate, infer, preprocess
from .profile import ModelProfile, ValidationRecord, build_profile, select_aggregator
from .router import ExpertAssignment, RoutingParams, global_competency, local_suitability, route, trim_and_resample
from .scheduler import CostModel, build_batch_plan, estimate_costs, partition_workers
