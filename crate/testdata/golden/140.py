def unsigned(scores):
    return [abs(item) for item in scores]
