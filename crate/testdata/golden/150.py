def restrict(value):
    return min(max(value, 0), 15)
