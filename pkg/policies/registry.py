from typing import Callable, Dict, Type, TypeVar

POLICIES: Dict[str, Type] = {}

T = TypeVar("T", bound=Type)


def register(kind: str) -> Callable[[T], T]:
    """
    Register a policy class under ``kind`` so ``decide`` can find it.
    """

    def decorator(policy_cls: T) -> T:
        if kind not in POLICIES:
            POLICIES[kind] = policy_cls
        return policy_cls

    return decorator
