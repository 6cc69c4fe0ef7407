def consecutive(level):
    return [level + step for step in range(4)]
