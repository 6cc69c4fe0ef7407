def tail(prices):
    return prices[len(prices) - 1]
