"""
Synthetic compositions with a planted role structure.

Every composition follows a role template of five slots. Each slot is filled
with an unused agent of the slot's role; with probability ``noise`` the slot
role is first replaced by one drawn from that role's affinity distribution
(uniform over all roles unless given). Randomness comes from numpy's PCG64
bit generator seeded with ``seed``, so a model and seed always produce the
same dataset.
"""
import toml
import logging
import numpy as np
import pandas as pd
from dacite import from_dict
from dataclasses import field
from dataclasses import dataclass
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from sklearn.metrics import adjusted_rand_score

from rolecluster.ingest import TEAM_SIZE
from rolecluster.ingest import TeamComposition
from rolecluster.ingest import write_compositions
from rolecluster.hac import ClusterAssignment
from rolecluster.pipeline import analyze_compositions
from rolecluster._exceptions import InputError

logger = logging.getLogger(__name__)


@dataclass
class Role:
    name: str
    agents: List[str]
    affinity: Optional[Dict[str, float]] = None


@dataclass
class PlantedModel:
    """
    Roles with disjoint agent sets and the templates compositions follow.
    An empty ``templates`` list means one template cycling through the
    roles in order.
    """
    roles: List[Role]
    templates: List[List[str]] = field(default_factory=list)
    template_weights: Optional[List[float]] = None
    noise: float = 0.0
    num_compositions: int = 1000
    seed: int = 0
    team_size: int = TEAM_SIZE
    map: str = "Synthetic"

    @classmethod
    def from_file(cls, path: str) -> "PlantedModel":
        """
        Load a model from TOML.

        :raises InputError: If the file cannot be read or converted.
        """
        try:
            data = dict(toml.load(path))
            return from_dict(data_class=cls, data=data).validate()
        except InputError:
            raise
        except Exception as e:
            raise InputError(f"Invalid model spec {path}: {e}")

    @property
    def role_names(self) -> List[str]:
        return [r.name for r in self.roles]

    def resolved_templates(self) -> List[List[str]]:
        if self.templates:
            return [list(t) for t in self.templates]
        names = self.role_names
        return [[names[i % len(names)] for i in range(self.team_size)]]

    def labels(self) -> Dict[str, int]:
        """Planted role index of every agent."""
        return {agent: i for i, role in enumerate(self.roles)
                for agent in role.agents}

    def affinity_matrix(self) -> np.ndarray:
        n = len(self.roles)
        matrix = np.full((n, n), 1.0 / n)
        for i, role in enumerate(self.roles):
            if role.affinity:
                matrix[i] = [role.affinity.get(name, 0.0)
                             for name in self.role_names]
        return matrix

    def validate(self) -> "PlantedModel":
        """
        :raises InputError: If the model is malformed or cannot fill a team.
        """
        if self.team_size != TEAM_SIZE:
            raise InputError(f"team_size is fixed at {TEAM_SIZE}.")
        if not self.roles:
            raise InputError("Model needs at least one role.")
        names = self.role_names
        if len(set(names)) != len(names):
            raise InputError("Role names must be unique.")
        agents = [a for r in self.roles for a in r.agents]
        if len(set(agents)) != len(agents):
            raise InputError("Role member sets must be disjoint.")
        if len(agents) < TEAM_SIZE:
            raise InputError(
                f"Infeasible model: {len(agents)} agents cannot fill a team "
                f"of {TEAM_SIZE}.")
        if not 0.0 <= self.noise <= 1.0:
            raise InputError(f"noise must lie in [0, 1], got {self.noise}.")
        if self.num_compositions < 1:
            raise InputError("num_compositions must be positive.")

        sizes = {r.name: len(r.agents) for r in self.roles}
        for template in self.resolved_templates():
            if len(template) != TEAM_SIZE:
                raise InputError(
                    f"Template {template} must have {TEAM_SIZE} slots.")
            for name in set(template):
                if name not in sizes:
                    raise InputError(f"Template uses unknown role '{name}'.")
                if template.count(name) > sizes[name]:
                    raise InputError(
                        f"Infeasible model: template {template} needs "
                        f"{template.count(name)} '{name}' agents, the role "
                        f"has {sizes[name]}.")
        if self.template_weights is not None:
            weights = np.asarray(self.template_weights, dtype=float)
            if len(weights) != len(self.resolved_templates()) or \
                    np.any(weights < 0) or weights.sum() <= 0:
                raise InputError("template_weights do not match templates.")

        for role in self.roles:
            if not role.affinity:
                continue
            unknown = set(role.affinity) - set(names)
            if unknown:
                raise InputError(
                    f"Role '{role.name}' affinity names unknown roles "
                    f"{sorted(unknown)}.")
            values = np.asarray(list(role.affinity.values()), dtype=float)
            if np.any(values < 0) or abs(values.sum() - 1.0) > 1e-9:
                raise InputError(
                    f"Role '{role.name}' affinities must be non-negative "
                    f"and sum to 1.")
        return self


def generate(model: PlantedModel) -> List[TeamComposition]:
    """
    Draw ``model.num_compositions`` compositions.

    :param model: Planted model, validated here.
    :type model: PlantedModel

    :return: Compositions in draw order.
    :rtype: List[TeamComposition]

    :raises InputError: If the model is infeasible.
    """
    model.validate()
    rng = np.random.Generator(np.random.PCG64(model.seed))

    index = {name: i for i, name in enumerate(model.role_names)}
    templates = [[index[name] for name in t]
                 for t in model.resolved_templates()]
    weights = None
    if model.template_weights is not None:
        weights = np.asarray(model.template_weights, dtype=float)
        weights = weights / weights.sum()
    affinity = model.affinity_matrix()
    members = [list(r.agents) for r in model.roles]
    everyone = [a for r in model.roles for a in r.agents]

    comps = []
    for n in range(model.num_compositions):
        template = templates[int(rng.choice(len(templates), p=weights))]
        used = set()
        chosen = []
        for slot_role in template:
            role = slot_role
            if rng.random() < model.noise:
                role = int(rng.choice(len(members), p=affinity[slot_role]))
            pool = [a for a in members[role] if a not in used]
            if not pool:
                pool = [a for a in members[slot_role] if a not in used]
            if not pool:
                pool = [a for a in everyone if a not in used]
            agent = pool[int(rng.integers(len(pool)))]
            used.add(agent)
            chosen.append(agent)
        comps.append(TeamComposition(
            composition_id=f"s{n}",
            map=model.map,
            team=f"synthetic-{model.seed}",
            agents=tuple(chosen),
            tournament="synthetic",
        ))
    logger.info(f"Generated {len(comps)} compositions "
                f"(seed {model.seed}, noise {model.noise})")
    return comps


def write_dataset(model: PlantedModel, dest) -> None:
    """Generate and write in the wide CSV layout read by ingest."""
    write_compositions(generate(model), dest)


def recovery_score(model: PlantedModel,
                   assignment: ClusterAssignment) -> float:
    """
    Adjusted Rand Index between a recovered partition and the planted
    roles, over the agents of the assignment.
    """
    planted = model.labels()
    agents = list(assignment.labels)
    return float(adjusted_rand_score([planted[a] for a in agents],
                                     [assignment.labels[a] for a in agents]))


def noise_sweep(model: PlantedModel, noise_levels: Sequence[float],
                seeds: Sequence[int], workers: int = 1) -> pd.DataFrame:
    """
    Recovery ARI for every (noise, seed) pair, clustering at the silhouette
    selected k.

    :return: Columns noise, seed, best_k, ari; one row per run. Use
        ``groupby("noise").ari.mean()`` for the averages.
    :rtype: pandas.DataFrame
    """
    rows = []
    for noise in noise_levels:
        for seed in seeds:
            variant = PlantedModel(
                roles=model.roles,
                templates=model.templates,
                template_weights=model.template_weights,
                noise=float(noise),
                num_compositions=model.num_compositions,
                seed=int(seed),
                map=model.map,
            )
            snapshot = analyze_compositions(
                generate(variant), label=f"noise={noise} seed={seed}",
                workers=workers)
            rows.append({"noise": float(noise), "seed": int(seed),
                         "best_k": snapshot.assignment.k,
                         "ari": recovery_score(variant, snapshot.assignment)})
    return pd.DataFrame(rows, columns=["noise", "seed", "best_k", "ari"])
