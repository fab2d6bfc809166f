"""Bell inequalities for hybrid (k-local) hidden-variable models.

Exact enumeration of party-symmetric full-body correlation Bell inequalities
via cone projection and double description, with classical / no-signaling /
quantum (seesaw) bounds and white-noise robustness scans.
"""

from .core import (Behavior, BehaviorSpace, MarginalConvention, Scenario,
                   SymmetricInequality, SymmetryGroup, canonicalize, evaluate,
                   expand_symmetric, from_class_vector, ineq_from_dict,
                   ineq_from_json, ineq_to_dict, ineq_to_json, render_text)
from .models import (HybridModel, classical_bound, extremal_behaviors,
                     extremal_matrix, partition_count, partitions_of_type)
from .cpt import (CatalogEntry, Cone, FacetCandidate, dd_facets,
                  enumerate_facets, lift_check, project_symmetric)

__version__ = "0.1.0"
