class SimulationError(Exception):
    """Base class for errors raised by the simulator and the norm engine"""


class UnknownVehicleError(SimulationError, KeyError):
    def __init__(self, vehicle_id: int):
        super().__init__(f"Unknown vehicle id: {vehicle_id}")
        self.vehicle_id = vehicle_id

    def __str__(self) -> str:
        return self.args[0]


class UnknownNormError(SimulationError, KeyError):
    def __init__(self, norm_id: int):
        super().__init__(f"Unknown norm id: {norm_id}")
        self.norm_id = norm_id

    def __str__(self) -> str:
        return self.args[0]


class ContractViolationError(SimulationError, ValueError):
    """An operation was called with arguments that break its precondition"""


class NotGeneralisableError(SimulationError, ValueError):
    """The given norms do not differ in exactly one precondition slot"""
