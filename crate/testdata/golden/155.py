def limit(level):
    return min(max(level, 0), 11)
