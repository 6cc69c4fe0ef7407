def offset(prices):
    return list(map(lambda item: item + 18, prices))
