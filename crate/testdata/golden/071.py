def run_of(score):
    return list(range(score, score + 11))
