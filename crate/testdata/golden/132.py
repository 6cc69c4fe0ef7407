def offset(arr):
    return [item + 12 for item in arr]
