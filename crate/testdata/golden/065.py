def run_of(n):
    return [n + step for step in range(5)]
