def magnitudes(prices):
    return [abs(item) for item in prices]
