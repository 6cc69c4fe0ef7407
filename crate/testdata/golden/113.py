def greater_than(scores):
    return [item for item in scores if item > 11]
