def run_of(total):
    return list(range(total, total + 1))
