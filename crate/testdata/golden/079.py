def bound(n):
    return min(max(n, 0), 6)
