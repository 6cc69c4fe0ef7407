def absolute(arr):
    return [abs(item) for item in arr]
