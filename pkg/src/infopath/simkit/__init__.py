"""Grid environments, simulated sensing and Monte Carlo studies.

``experiment`` is not imported here because it depends on the planners,
which in turn use :mod:`.world`.
"""

from .world import GroundTruth, GridSpec, generate_grid, sample_ground_truth, sample_report

__all__ = ["GroundTruth", "GridSpec", "generate_grid", "sample_ground_truth", "sample_report"]
