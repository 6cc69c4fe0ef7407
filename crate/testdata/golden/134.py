def position(nums, target):
    return nums.index(target)
