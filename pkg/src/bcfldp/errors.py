"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed its configured resource budget.

    ``suggestion`` carries a human-readable hint (smaller cap, depth or a
    different method) that the CLI echoes back.
    """

    def __init__(self, message, suggestion=None):
        super().__init__(message)
        self.suggestion = suggestion

    def __str__(self):
        base = super().__str__()
        if self.suggestion:
            return f"{base} (try: {self.suggestion})"
        return base
