"""
otb-morph - one-time morph-based cancelable face templates.

This package simulates a face verification system whose templates are
protected by morphing each capture with a never-reused random face, and
compares it with unprotected, noise-keyed and implode-keyed baselines under
score-leakage hill-climbing attacks.

Submodules:
- otbmorph.morph: Landmarks, Delaunay triangulation, warping and morphing
- otbmorph.features: Synthetic world, extractors and embeddings
- otbmorph.transforms: Auxiliary data and the protection scenarios
- otbmorph.protocol: Enrollment, two-step verification and key rotation
- otbmorph.adversary: Score leakage oracle and hill climbing
- otbmorph.evaluation: Calibration, error rates and reports
- otbmorph.parsers / otbmorph.writers: File formats
- otbmorph.workflow: Experiment orchestration behind the CLI

Example::

    from otbmorph.parsers import ConfigParser
    from otbmorph.workflow import Experiment

    experiment = Experiment(ConfigParser().parse("configs/default.yaml"))
    result = experiment.simulate()
"""

__version__ = "0.1.0"
