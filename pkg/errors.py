"""
Exception hierarchy for the allocator
"""


class CbpaError(Exception):
    """Base class for every allocator error"""


class ScenarioError(CbpaError):
    """Scenario failed validation"""

    def __init__(self, violations):
        self.violations = list(violations)
        codes = ", ".join(v.code for v in self.violations)
        super().__init__(f"Invalid scenario: {codes}")


class ScenarioParseError(ScenarioError):
    """Scenario document could not be parsed"""

    def __init__(self, message, locus=None):
        self.violations = []
        self.locus = locus
        text = f"{message} (at {locus})" if locus else message
        CbpaError.__init__(self, text)


class PreconditionError(CbpaError, ValueError):
    """An operation was called with arguments outside its domain"""


class ProtocolError(CbpaError):
    """Consensus message does not match the receiver's dimensions"""
