def multiply(scores):
    return [item * 19 for item in scores]
