def annotated(x: int, y: str = 'a') -> bool:
    return isinstance(x, int)
