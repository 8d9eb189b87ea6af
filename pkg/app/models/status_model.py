from pydantic import BaseModel

from .policy_model import AdmissionDecision, WeightTable
from .stability_model import StabilitySnapshot


class StatusPublic(BaseModel):
    snapshot: StabilitySnapshot
    weights: WeightTable
    admission: AdmissionDecision
