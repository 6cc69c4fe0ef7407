def tail(nums):
    return nums[-1]
