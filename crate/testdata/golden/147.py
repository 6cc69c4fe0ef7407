def above(arr):
    return [item for item in arr if item > 1]
